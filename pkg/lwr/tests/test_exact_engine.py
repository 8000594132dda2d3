from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, tag

from lwr.constraints import StepConstraint, build_constraint
from lwr.exact_engine import DOWN, UP, evacuation_time, run_exact, xi_crossing_times, xi_pieces
from lwr.flux import build_lwr_flux, piecewise_linear_flux
from lwr.monitor import run_checks
from lwr.profile import DensityProfile, linear_weight
from lwr.riemann import constrained_local_riemann
from lwr.runner import simulate
from lwr.scenario import SEC5_REFERENCE, compare_sec5, sec5_milestones, sec5_scenario
from lwr.tracking import FrontTracker


class InputTests(SimpleTestCase):

    def setUp(self):
        self.flux = build_lwr_flux(1.0, 1.0)
        self.w = linear_weight(1.0)

    def test_lipschitz_constraint_rejected(self):
        p = build_constraint({'kind': 'lipschitz', 'xi': [0.25, 0.75], 'p': [0.2, 0.1]})
        with self.assertRaises(ValidationError) as ctx:
            run_exact(DensityProfile.constant(0.0), self.flux, self.w, p, T=1.0)
        self.assertEqual(ctx.exception.code, 'engine_constraint')

    def test_unknown_policy(self):
        p = StepConstraint((0.5,), (0.2, 0.1))
        with self.assertRaises(ValidationError):
            run_exact(DensityProfile.constant(0.0), self.flux, self.w, p, policy='median', T=1.0)


class TrivialRunTests(SimpleTestCase):

    def setUp(self):
        self.flux = build_lwr_flux(1.0, 1.0)
        self.w = linear_weight(1.0)
        self.p = StepConstraint((0.5,), (0.2, 0.1))

    def test_empty_corridor(self):
        traj = run_exact(DensityProfile.constant(0.0), self.flux, self.w, self.p, n_fan=4, T=1.0)
        self.assertEqual(traj.segments, [])
        self.assertEqual(traj.milestones['evacuation'], {'evacuated': True, 'time': 0.0, 'remaining_mass': 0.0})
        self.assertIsNone(traj.milestones['t_C'])
        self.assertTrue(all(report.passed for report in run_checks(traj)))

    def test_block_past_the_exit(self):
        """Nothing ever sits on x < 0."""
        rho0 = DensityProfile.build([0.5, 1.0], [0.0, 0.5, 0.0])
        traj = run_exact(rho0, self.flux, self.w, self.p, n_fan=4, T=1.0)
        result = evacuation_time(traj)
        self.assertTrue(result.evacuated)
        self.assertEqual(result.time, 0.0)
        self.assertEqual(traj.milestones['crossings'], [])

    def test_first_arrival_follows_leading_characteristic(self):
        """The fan from x = -1 is led by f'(0) = 1, not by its first mesh front."""
        rho0 = DensityProfile.build([-2.0, -1.0], [0.0, 1.0, 0.0])
        traj = run_exact(rho0, self.flux, self.w, self.p, n_fan=6, T=1.5)
        self.assertAlmostEqual(traj.milestones['t_C'], 1.0, places=12)
        first_exit = min(e.time for e in traj.events if e.type == 'exit' and e.label != 'initial')
        self.assertGreater(first_exit, 1.0)

    def test_samples(self):
        traj = run_exact(DensityProfile.constant(0.0), self.flux, self.w, self.p, n_fan=4, T=1.0, sample_dt=0.25)
        self.assertEqual([s.t for s in traj.samples], [0.0, 0.25, 0.5, 0.75, 1.0])


class XiCrossingTests(SimpleTestCase):
    """
    A shock 0.2 | 0.6 starting at x = -1.5 moves right at speed 0.2. Once it is
    inside the weight window xi(t) = 0.6 - 0.4 (0.2 t - 0.5)^2, which meets
    0.5 at t = 5.
    """

    def setUp(self):
        flux = build_lwr_flux(1.0, 1.0)
        f_n = piecewise_linear_flux(flux, 6)
        self.w = linear_weight(1.0)
        self.tracker = FrontTracker(f_n, lambda l, r: constrained_local_riemann(f_n, l, r, 0.25, exact=True),
                                    exact=True)
        self.tracker.load(DensityProfile.build([-1.5], [0.2, 0.6]))

    def test_single_downward_crossing(self):
        crossings = xi_crossing_times(self.tracker, self.w, [0.5], 7.0)
        self.assertEqual(len(crossings), 1)
        self.assertAlmostEqual(crossings[0].time, 5.0, places=9)
        self.assertEqual(crossings[0].index, 0)
        self.assertEqual(crossings[0].direction, DOWN)

    def test_unreached_threshold(self):
        self.assertEqual(xi_crossing_times(self.tracker, self.w, [0.7], 7.0), [])

    def test_pieces_match_direct_average(self):
        pieces = xi_pieces(self.tracker, self.w, 7.0)
        self.assertEqual(pieces[0].start, 0.0)
        self.assertAlmostEqual(pieces[-1].end, 7.0)
        for t in (1.0, 2.5, 3.0, 4.2, 6.9):
            piece = next(pc for pc in pieces if pc.start <= t <= pc.end)
            with self.subTest(t=t):
                self.assertAlmostEqual(piece(t), self.tracker.nonlocal_average(self.w, t), places=10)

    def test_crossing_after_partial_advance(self):
        self.tracker.move_to(3.0)
        crossings = xi_crossing_times(self.tracker, self.w, [0.5, 0.59], 3.0)
        self.assertEqual([c.index for c in crossings], [1, 0])
        self.assertTrue(all(c.direction == DOWN for c in crossings))
        self.assertNotIn(UP, {c.direction for c in crossings})


@tag('slow')
class CorridorTests(SimpleTestCase):
    """The packed-corridor evacuation."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.traj = simulate(sec5_scenario())

    def test_first_arrival(self):
        """The leading fan characteristic has speed 1 and starts at x = -2."""
        self.assertAlmostEqual(self.traj.milestones['t_C'], 2.0, delta=1e-6)

    def test_queue_forms(self):
        """f(0.3) = 0.21 reaches the exit at t = 2 / 0.4."""
        self.assertAlmostEqual(self.traj.milestones['t_D'], 5.0, delta=5e-3)

    def test_milestones_match_reference(self):
        computed = sec5_milestones(self.traj)
        for name in ('t_E', 't_G', 't_I'):
            with self.subTest(milestone=name):
                self.assertIsNotNone(computed[name])
                self.assertLess(abs(computed[name] - SEC5_REFERENCE[name]) / SEC5_REFERENCE[name], 0.01)
        self.assertAlmostEqual(computed['x_M'], SEC5_REFERENCE['x_M'], delta=5e-3)
        self.assertTrue(self.traj.milestones['evacuation']['evacuated'])

    def test_checks_pass(self):
        failed = [r.check for r in run_checks(self.traj) if not r.passed]
        self.assertEqual(failed, [])

    def test_comparison_rows(self):
        rows, _ = compare_sec5(self.traj)
        names = [row[0] for row in rows]
        self.assertEqual(names, ['t_C', 't_L', 't_D', 't_E', 't_G', 't_I', 'x_M'])


@tag('slow')
class RefinementTests(SimpleTestCase):

    def test_evacuation_time_converges(self):
        """Finer fan sampling never moves the evacuation time away from the reference."""
        errors = []
        for n_fan in (8, 10, 12):
            t_i = sec5_milestones(simulate(sec5_scenario(n_fan=n_fan)))['t_I']
            self.assertIsNotNone(t_i)
            errors.append(abs(t_i - SEC5_REFERENCE['t_I']))
        self.assertEqual(errors, sorted(errors, reverse=True))
