import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, tag

from lwr.constraints import FrozenLevels, StepConstraint
from lwr.flux import build_lwr_flux, piecewise_linear_flux
from lwr.monitor import front_problems
from lwr.region_map import region_map
from lwr.riemann import (
    CASE_LABELS, FAN, NONCLASSICAL, PATHOLOGICAL_LABELS, RP, RQ, SHOCK, classical_riemann, classify,
    constrained_local_riemann, enumerate_local_solutions, solve_policy,
)
from lwr.scenario import SEC5_LEVELS, SEC5_THRESHOLDS
from lwr.trajectory import FrontSegment


def as_segments(fan, t=1.0):
    """Front segments of a self-similar fan issued from (0, 0)."""
    return [
        FrontSegment(i, 0.0, 0.0, t, front.speed * t, front.rho_left, front.rho_right, front.kind,
                     fan.level if front.kind == NONCLASSICAL else None, front.speed)
        for i, front in enumerate(fan.fronts)
    ]


def chained(fan):
    states = [fan.rho_left] + [front.rho_right for front in fan.fronts]
    lefts = [front.rho_left for front in fan.fronts]
    return not fan.fronts or (lefts == states[:-1] and states[-1] == fan.rho_right)


class ClassicalRiemannTests(SimpleTestCase):
    """Classical fans on the mesh and under the exact flux."""

    def setUp(self):
        self.flux = build_lwr_flux(1.0, 1.0)
        self.f_n = piecewise_linear_flux(self.flux, 3)
        self.nodes = self.f_n.mesh.nodes

    def test_non_node_states_rejected(self):
        with self.assertRaises(ValidationError) as ctx:
            classical_riemann(self.f_n, 0.3, 0.7)
        self.assertEqual(ctx.exception.code, 'mesh_closure')

    def test_shock(self):
        """An increasing jump is one shock at the chord speed of f^n."""
        fan = classical_riemann(self.f_n, self.nodes[2], self.nodes[10])
        self.assertEqual(len(fan.fronts), 1)
        front = fan.fronts[0]
        self.assertEqual(front.kind, SHOCK)
        expected = (self.f_n(self.nodes[2]) - self.f_n(self.nodes[10])) / (self.nodes[2] - self.nodes[10])
        self.assertAlmostEqual(front.speed, expected, places=14)

    def test_fan(self):
        """A decreasing jump opens one front per mesh cell, speeds increasing."""
        fan = classical_riemann(self.f_n, self.nodes[12], self.nodes[4])
        self.assertEqual(len(fan.fronts), 8)
        self.assertTrue(all(front.kind == FAN for front in fan.fronts))
        speeds = [front.speed for front in fan.fronts]
        self.assertTrue(all(a < b for a, b in zip(speeds, speeds[1:])))
        self.assertTrue(chained(fan))
        self.assertEqual(fan.trace_left, 0.5)
        self.assertAlmostEqual(fan.exit_flux, 0.25)

    def test_exact_mode_splits_on_mesh(self):
        """Arbitrary states are accepted in exact mode; fans break at interior nodes."""
        fan = classical_riemann(self.f_n, 0.7, 0.3, exact=True)
        inner = self.f_n.mesh.interior_nodes(0.3, 0.7)
        self.assertEqual(len(fan.fronts), len(inner) + 1)
        self.assertTrue(chained(fan))
        for segment in as_segments(fan):
            self.assertEqual(front_problems(self.flux, self.f_n.mesh, segment), [])

    def test_equal_states(self):
        fan = classical_riemann(self.f_n, self.nodes[3], self.nodes[3])
        self.assertTrue(fan.is_empty)
        self.assertEqual(fan.trace_left, self.nodes[3])


class ConstrainedRiemannTests(SimpleTestCase):
    """The solver at x = 0 for a frozen efficiency."""

    def setUp(self):
        self.flux = build_lwr_flux(1.0, 1.0)
        self.f_n = piecewise_linear_flux(self.flux, 3)
        self.nodes = self.f_n.mesh.nodes

    def test_classical_when_below_q(self):
        fan = constrained_local_riemann(self.f_n, self.nodes[2], self.nodes[1], 0.125)
        self.assertIsNone(fan.nonclassical)
        self.assertLessEqual(fan.exit_flux, 0.125)

    def test_nonclassical_at_q(self):
        """Data (rho_hat(q), rho_check(q)) is a single stationary nonclassical shock."""
        fan = constrained_local_riemann(self.f_n, self.nodes[12], self.nodes[4], 0.125)
        self.assertEqual(len(fan.fronts), 1)
        front = fan.fronts[0]
        self.assertEqual(front.kind, NONCLASSICAL)
        self.assertEqual(front.speed, 0.0)
        self.assertEqual(fan.level, 0.125)
        self.assertEqual(fan.exit_flux, 0.125)
        self.assertEqual((fan.trace_left, fan.trace_right), (self.nodes[12], self.nodes[4]))

    def test_nonclassical_with_waves(self):
        """A queue forms upstream and a fan leaves downstream."""
        fan = constrained_local_riemann(self.f_n, self.nodes[6], self.nodes[0], 0.0625)
        self.assertTrue(chained(fan))
        nc = fan.nonclassical
        self.assertEqual((nc.rho_left, nc.rho_right), (self.nodes[14], self.nodes[2]))
        self.assertTrue(all(front.speed < 0 for front in fan.fronts[:fan.fronts.index(nc)]))
        self.assertTrue(all(front.speed > 0 for front in fan.fronts[fan.fronts.index(nc) + 1:]))

    def test_q_must_be_positive(self):
        with self.assertRaises(ValidationError) as ctx:
            constrained_local_riemann(self.f_n, self.nodes[6], self.nodes[0], 0.0)
        self.assertEqual(ctx.exception.code, 'constraint_positive')


class ClassifyTests(SimpleTestCase):
    """Case labels of constrained Riemann data."""

    def setUp(self):
        self.flux = build_lwr_flux(1.0, 1.0)
        self.p = FrozenLevels(0.2, 0.2)

    def test_classical_cases(self):
        self.assertEqual(classify(self.flux, self.p, 0.4, 0.9), 'C1')
        self.assertEqual(classify(self.flux, self.p, 0.1, 0.2), 'C2')
        self.assertEqual(classify(self.flux, self.p, 0.1, 0.05), 'C3')
        self.assertEqual(classify(self.flux, FrozenLevels(0.25, 0.25), 0.8, 0.1), 'C4')
        self.assertEqual(classify(self.flux, self.p, 0.95, 0.9), 'C5')
        # Increasing data with f decreasing is a shock, whatever side of rho_bar
        self.assertEqual(classify(self.flux, self.p, 0.9, 0.95), 'C1')

    def test_nonclassical_cases(self):
        self.assertEqual(classify(self.flux, self.p, 0.4, 0.6), 'N2')
        self.assertEqual(classify(self.flux, self.p, 0.3, 0.1), 'N3')
        self.assertEqual(classify(self.flux, self.p, 0.8, 0.1), 'N4a')
        self.assertEqual(classify(self.flux, self.p, 0.9, 0.7), 'N5a')
        self.assertEqual(classify(self.flux, self.p, 0.7, 0.6), 'N5b')

    def test_pathological_case(self):
        """f(rho_l) between the two one-sided values of p gives NNN4."""
        p = StepConstraint(thresholds=(0.8,), values=(0.2, 0.1))
        self.assertEqual(classify(self.flux, p, 0.8, 0.1), 'NNN4')
        self.assertEqual(classify(self.flux, p, 0.8, 0.75), 'CNN5')
        self.assertEqual(classify(self.flux, p, 0.8, 0.6), 'NNN5')


class PolicyTests(SimpleTestCase):
    """R^q and R^p pick the extremal admissible solutions."""

    def setUp(self):
        self.flux = build_lwr_flux(1.0, 1.0)
        self.f_n = piecewise_linear_flux(self.flux, 3)
        self.p = StepConstraint(thresholds=(0.8,), values=(0.2, 0.1))

    def test_nnn4_solutions(self):
        """Three levels are admissible; R^q takes the largest and R^p the smallest."""
        solutions = enumerate_local_solutions(self.f_n, self.p, 0.8, 0.1)
        levels = sorted(s.level for s in solutions)
        self.assertEqual(len(levels), 3)
        for got, want in zip(levels, [0.1, 0.16, 0.2]):
            self.assertAlmostEqual(got, want, places=12)
        fan_q, label = solve_policy(self.f_n, self.p, 0.8, 0.1, RQ)
        self.assertEqual(label, 'NNN4')
        self.assertEqual(fan_q.level, 0.2)
        fan_p, _ = solve_policy(self.f_n, self.p, 0.8, 0.1, RP)
        self.assertEqual(fan_p.level, 0.1)
        for solution in solutions:
            for segment in as_segments(solution.fan):
                self.assertEqual(front_problems(self.flux, self.f_n.mesh, segment), [])

    def test_unknown_policy(self):
        with self.assertRaises(ValidationError):
            solve_policy(self.f_n, self.p, 0.8, 0.1, 'rz')

    def test_agreement_off_pathological_data(self):
        """Away from pathological data both policies give the same fan."""
        p = FrozenLevels(0.2, 0.2)
        for rho_l, rho_r in [(0.4, 0.9), (0.4, 0.6), (0.8, 0.1), (0.7, 0.9)]:
            fan_q, _ = solve_policy(self.f_n, p, rho_l, rho_r, RQ)
            fan_p, _ = solve_policy(self.f_n, p, rho_l, rho_r, RP)
            self.assertEqual(fan_q, fan_p)

    def test_extremal_over_grid(self):
        """On every pathological grid point the policies bound the admissible exit fluxes."""
        densities = np.union1d(np.linspace(0.0, 1.0, 21), [0.8])
        seen = set()
        for rho_l in densities:
            for rho_r in densities:
                rho_l, rho_r = float(rho_l), float(rho_r)
                label = classify(self.flux, self.p, rho_l, rho_r)
                self.assertIn(label, CASE_LABELS)
                solutions = enumerate_local_solutions(self.f_n, self.p, rho_l, rho_r)
                for solution in solutions:
                    self.assertTrue(chained(solution.fan))
                    for segment in as_segments(solution.fan):
                        self.assertEqual(front_problems(self.flux, self.f_n.mesh, segment), [],
                                         msg=f'{label} at ({rho_l}, {rho_r})')
                if label not in PATHOLOGICAL_LABELS:
                    self.assertEqual(len(solutions), 1)
                    continue
                seen.add(label)
                fluxes = [s.fan.exit_flux for s in solutions]
                fan_q, _ = solve_policy(self.f_n, self.p, rho_l, rho_r, RQ)
                fan_p, _ = solve_policy(self.f_n, self.p, rho_l, rho_r, RP)
                self.assertAlmostEqual(fan_q.exit_flux, max(fluxes), places=12)
                self.assertAlmostEqual(fan_p.exit_flux, min(fluxes), places=12)
        self.assertEqual(seen, {'NNN4', 'CNN5', 'NNN5'})


@tag('slow')
class CorridorConstraintSweepTests(SimpleTestCase):
    """Both policies over a fine grid under the two-threshold corridor constraint."""

    def setUp(self):
        self.flux = build_lwr_flux(1.0, 1.0)
        self.f_n = piecewise_linear_flux(self.flux, 6)
        self.p = StepConstraint(SEC5_THRESHOLDS, SEC5_LEVELS)

    def test_policies_over_grid(self):
        densities = np.linspace(0.0, 1.0, 201)
        for rho_l in densities:
            for rho_r in densities:
                rho_l, rho_r = float(rho_l), float(rho_r)
                solutions = enumerate_local_solutions(self.f_n, self.p, rho_l, rho_r)
                fan_q, label = solve_policy(self.f_n, self.p, rho_l, rho_r, RQ)
                fan_p, _ = solve_policy(self.f_n, self.p, rho_l, rho_r, RP)
                msg = f'{label} at ({rho_l}, {rho_r})'
                if label not in PATHOLOGICAL_LABELS:
                    self.assertEqual(fan_q, fan_p, msg=msg)
                fluxes = [s.fan.exit_flux for s in solutions]
                self.assertAlmostEqual(fan_q.exit_flux, max(fluxes), places=12, msg=msg)
                self.assertAlmostEqual(fan_p.exit_flux, min(fluxes), places=12, msg=msg)

    def test_region_map_has_no_c4(self):
        counts = region_map(self.flux, self.p, 201).counts()
        self.assertNotIn('C4', counts)
        self.assertEqual(sum(counts.values()), 201 * 201)
