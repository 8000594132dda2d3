from types import SimpleNamespace

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, tag

from lwr.constraints import build_constraint
from lwr.flux import build_lwr_flux, piecewise_linear_flux
from lwr.monitor import (
    CheckReport,
    TempleRecord,
    check_efficiency_jumps,
    check_temple_monotone,
    classify_update,
    expected_delta,
    front_problems,
    stability_pair,
)
from lwr.profile import DensityProfile, linear_weight
from lwr.riemann import FAN, NONCLASSICAL, SHOCK
from lwr.split_engine import build_split_config
from lwr.trajectory import EventRecord, FrontSegment, StepRecord, Trajectory


def segment(rho_l, rho_r, speed, kind, x=-1.0, level=None):
    return FrontSegment(front_id=1, t_start=0.0, x_start=x, t_end=1.0, x_end=x + speed,
                        rho_left=rho_l, rho_right=rho_r, kind=kind, level=level, speed=speed)


def reasons(problems):
    return {reason for reason, _ in problems}


class LedgerTests(SimpleTestCase):

    def test_expected_delta(self):
        self.assertAlmostEqual(expected_delta('U1a', 0.25, 5, 3), -0.28125)
        self.assertAlmostEqual(expected_delta('I1b', 0.25, 5, 3), -0.015625)
        self.assertEqual(expected_delta('I3a', 0.25, 5, 3), 0.0)
        self.assertIsNone(expected_delta('I0', 0.25, 5, 3))

    def test_classify_update(self):
        self.assertEqual(classify_update(0.1, 0.1, True), 'U-noop')
        self.assertEqual(classify_update(0.1, 0.2, False), 'U1a')
        self.assertEqual(classify_update(0.1, 0.2, True), 'U1b')
        self.assertEqual(classify_update(0.2, 0.1, False), 'U2a')
        self.assertEqual(classify_update(0.2, 0.1, False, SimpleNamespace(created_nonclassical=True)), 'U2b')
        self.assertEqual(classify_update(0.2, 0.1, True), 'U2c')


class FrontProblemTests(SimpleTestCase):
    """Admissibility of single front segments under f(rho) = rho (1 - rho)."""

    def setUp(self):
        self.flux = build_lwr_flux(1.0, 1.0)
        self.mesh = piecewise_linear_flux(self.flux, 3).mesh
        self.nodes = self.mesh.nodes

    def fan(self, upper, lower):
        rho_l, rho_r = self.nodes[upper], self.nodes[lower]
        speed = (self.flux(rho_l) - self.flux(rho_r)) / (rho_l - rho_r)
        return segment(rho_l, rho_r, speed, FAN)

    def test_admissible_shock(self):
        self.assertEqual(front_problems(self.flux, self.mesh, segment(0.25, 0.75, 0.0, SHOCK)), [])

    def test_decreasing_shock(self):
        self.assertEqual(reasons(front_problems(self.flux, self.mesh, segment(0.75, 0.25, 0.0, SHOCK))), {'lax'})

    def test_wrong_speed(self):
        problems = front_problems(self.flux, self.mesh, segment(0.25, 0.75, 0.3, SHOCK))
        self.assertIn('rankine_hugoniot', reasons(problems))

    def test_fan_fronts(self):
        self.assertEqual(front_problems(self.flux, self.mesh, self.fan(5, 4)), [])
        self.assertEqual(reasons(front_problems(self.flux, self.mesh, self.fan(6, 4))), {'fan_width'})

    def test_nonclassical_front(self):
        at_exit = segment(0.75, 0.25, 0.0, NONCLASSICAL, x=0.0, level=0.1875)
        self.assertEqual(front_problems(self.flux, self.mesh, at_exit), [])
        away = segment(0.75, 0.25, 0.0, NONCLASSICAL, x=-0.1, level=0.1875)
        self.assertEqual(reasons(front_problems(self.flux, self.mesh, away)), {'nonclassical_away_from_exit'})
        wrong_level = segment(0.75, 0.25, 0.0, NONCLASSICAL, x=0.0, level=0.125)
        self.assertEqual(reasons(front_problems(self.flux, self.mesh, wrong_level)), {'nonclassical_level'})


def split_trajectory(**config):
    return Trajectory(engine='split', T=1.0, config={
        'f_max': 0.25, 'n': 5, 'h': 3, 'dt_nominal': 0.15625, 'w0': 2.0, 'lip_p': 0.2,
        'flux': {'kind': 'lwr', 'v_max': 1.0, 'R': 1.0}, **config,
    })


class SyntheticTrajectoryTests(SimpleTestCase):
    """Checks report violations planted in hand-made trajectories."""

    def test_upsilon_increase(self):
        traj = split_trajectory()
        traj.temple = [TempleRecord(0.0, 0.0, 0.25, 1.0, 1.25, 0), TempleRecord(0.1, 0.1, 0.25, 1.0, 1.35, 2)]
        report = check_temple_monotone(traj)
        self.assertFalse(report.passed)
        self.assertAlmostEqual(report.worst_violation, 0.1)
        self.assertEqual(report.context[0]['reason'], 'upsilon_increase')

    def test_label_mismatch(self):
        traj = split_trajectory()
        traj.events = [EventRecord(time=0.5, type='exit', location=0.0, label='I1b',
                                   upsilon_before=1.0, upsilon_after=1.0, waves_before=3, waves_after=3)]
        report = check_temple_monotone(traj)
        self.assertFalse(report.passed)
        self.assertEqual(report.context[0]['reason'], 'label_mismatch')

    def test_wave_creation_must_pay(self):
        traj = split_trajectory()
        traj.events = [EventRecord(time=0.5, type='collision', location=-1.0, label='I0',
                                   upsilon_before=1.0, upsilon_after=1.0, waves_before=2, waves_after=3)]
        report = check_temple_monotone(traj)
        self.assertEqual([c['reason'] for c in report.context], ['wave_creation'])

    def test_efficiency_jump_of_two_levels(self):
        traj = split_trajectory()
        traj.steps = [StepRecord(0, 0.0, 0.1, 6, 0.1875), StepRecord(1, 0.15625, 0.1, 4, 0.125)]
        report = check_efficiency_jumps(traj)
        self.assertEqual([c['reason'] for c in report.context], ['efficiency_jump'])

    def test_single_level_jump_passes(self):
        traj = split_trajectory()
        traj.steps = [StepRecord(0, 0.0, 0.1, 6, 0.1875), StepRecord(1, 0.15625, 0.15, 5, 0.15625)]
        self.assertTrue(check_efficiency_jumps(traj).passed)

    def test_report_dict(self):
        report = CheckReport('mass')
        report.fail(0.5, t=1.0)
        self.assertEqual(report.as_dict(), {
            'check': 'mass', 'pass': False, 'worst_violation': 0.5, 'checked': 0, 'context': [{'t': 1.0}],
        })


class StabilityTests(SimpleTestCase):

    def setUp(self):
        self.flux = build_lwr_flux(1.0, 1.0)
        self.w = linear_weight(1.0)
        self.p = build_constraint({'kind': 'lipschitz', 'xi': [0.25, 0.75], 'p': [0.2, 0.1]})
        self.cfg = build_split_config(5, 3, 1.0, self.w, self.p)
        self.rho0 = DensityProfile.build([-1.5, -0.5], [0.0, 0.5, 0.0])

    def test_identical_data(self):
        report = stability_pair(self.rho0, self.rho0, self.flux, self.w, self.p, self.cfg, L=2.0)
        self.assertEqual(report.lhs, 0.0)
        self.assertEqual(report.rhs, 0.0)
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.C, 0.8)
        self.assertTrue(report.as_dict()['pass'])

    def test_window_must_exceed_weight(self):
        with self.assertRaises(ValidationError) as ctx:
            stability_pair(self.rho0, self.rho0, self.flux, self.w, self.p, self.cfg, L=1.0)
        self.assertEqual(ctx.exception.code, 'stability_window')


@tag('slow')
class RandomStabilityTests(SimpleTestCase):
    """The L1 estimate holds for random pairs of nearby data."""

    def test_random_pairs(self):
        rng = np.random.default_rng(20240612)
        flux = build_lwr_flux(1.0, 1.0)
        for case in range(20):
            xi0 = rng.uniform(0.1, 0.4)
            p0 = rng.uniform(0.15, 0.24)
            p = build_constraint({'kind': 'lipschitz', 'xi': [xi0, xi0 + rng.uniform(0.2, 0.5)],
                                  'p': [p0, p0 * rng.uniform(0.2, 0.8)]})
            w = linear_weight(rng.uniform(0.5, 1.5))
            cfg = build_split_config(6, 3, 1.0, w, p)
            xs = np.sort(rng.uniform(-2.5, -0.2, size=4))
            values = [0.0] + list(rng.uniform(0.0, 1.0, size=3)) + [0.0]
            nearby = [0.0] + [min(v + rng.uniform(-0.1, 0.1), 1.0) for v in values[1:-1]] + [0.0]
            rho0 = DensityProfile.build(xs, values)
            rho0_tilde = DensityProfile.build(xs + rng.uniform(-0.05, 0.05), [max(v, 0.0) for v in nearby])
            report = stability_pair(rho0, rho0_tilde, flux, w, p, cfg, L=3.0)
            with self.subTest(case=case):
                self.assertTrue(report.passed, report.as_dict())
