import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from lwr.constraints import FrozenLevels, StepConstraint, approximate_constraint, build_constraint
from lwr.flux import build_lwr_flux


class StepConstraintTests(SimpleTestCase):
    """One-sided values of a decreasing step constraint."""

    def setUp(self):
        self.p = build_constraint({'kind': 'step', 'xi': [0.566, 0.731], 'p': [0.21, 0.168, 0.021]})

    def test_one_sided_values(self):
        """At a threshold the left value is the higher level and the right one the lower."""
        self.assertEqual(self.p.p_minus(0.566), 0.21)
        self.assertEqual(self.p.p_plus(0.566), 0.168)
        self.assertEqual(self.p.p_minus(0.6), 0.168)
        self.assertEqual(self.p.p_plus(0.6), 0.168)
        self.assertEqual(self.p.p_plus(0.9), 0.021)
        self.assertEqual(self.p.p_minus(0.0), 0.21)

    def test_increasing_values_rejected(self):
        with self.assertRaises(ValidationError) as ctx:
            StepConstraint(thresholds=(0.5,), values=(0.1, 0.2))
        self.assertEqual(ctx.exception.code, 'constraint_values')

    def test_shape(self):
        with self.assertRaises(ValidationError) as ctx:
            StepConstraint(thresholds=(0.5,), values=(0.2,))
        self.assertEqual(ctx.exception.code, 'constraint_shape')

    def test_against_flux(self):
        """Levels above f(rho_bar) and thresholds beyond R are rejected."""
        flux = build_lwr_flux(1.0, 1.0)
        self.p.validate_against(flux)
        with self.assertRaises(ValidationError):
            StepConstraint(thresholds=(0.5,), values=(0.3, 0.1)).validate_against(flux)
        with self.assertRaises(ValidationError):
            StepConstraint(thresholds=(1.5,), values=(0.2, 0.1)).validate_against(flux)

    def test_frozen_levels(self):
        levels = FrozenLevels(0.2, 0.1)
        self.assertEqual(levels.p_minus(0.9), 0.2)
        self.assertEqual(levels.p_plus(0.0), 0.1)


class LipschitzConstraintTests(SimpleTestCase):
    """Lipschitz constraints and their lattice approximation p^h."""

    def setUp(self):
        self.p = build_constraint({'kind': 'lipschitz', 'xi': [0.25, 0.75], 'p': [0.2, 0.1]})

    def test_values(self):
        self.assertEqual(self.p(0.0), 0.2)
        self.assertAlmostEqual(self.p(0.5), 0.15)
        self.assertEqual(self.p(1.0), 0.1)
        self.assertAlmostEqual(self.p.lip, 0.2)
        self.assertEqual(self.p.minimum, 0.1)

    def test_level_drop(self):
        """The last xi where p still reaches a level."""
        self.assertAlmostEqual(self.p.level_drop(0.15), 0.5)
        self.assertEqual(self.p.level_drop(0.3), 0.0)

    def test_increasing_rejected(self):
        with self.assertRaises(ValidationError):
            build_constraint({'kind': 'lipschitz', 'xi': [0.2, 0.5], 'p': [0.1, 0.2]})

    def test_approximation(self):
        """p(0) = 0.2 snaps to the lattice value 6/32, then p^h drops one step at a time."""
        p_h = approximate_constraint(self.p, 0.25, 3)
        self.assertEqual(p_h.step, 0.03125)
        self.assertEqual(p_h.k_top, 6)
        self.assertEqual(p_h.k_bottom, 4)
        self.assertEqual(len(p_h.thresholds), 2)
        self.assertAlmostEqual(p_h.thresholds[0], 0.3125, places=6)
        self.assertAlmostEqual(p_h.thresholds[1], 0.46875, places=6)
        self.assertAlmostEqual(p_h.snap_deviation, 0.0125)
        self.assertEqual(p_h(0.0), 0.1875)
        self.assertEqual(p_h(0.4), 0.15625)
        self.assertEqual(p_h(0.9), 0.125)
        self.assertEqual(p_h.mesh_index(0.4, 5), 20)

    def test_approximation_steps(self):
        """Consecutive levels of p^h differ by exactly one lattice step."""
        p_h = approximate_constraint(self.p, 0.25, 4)
        step = p_h.as_step_constraint()
        self.assertTrue(np.allclose(-np.diff(step.values), p_h.step))
        self.assertEqual(step.values[0], p_h.k_top * p_h.step)

    def test_approximation_below_p(self):
        """Before p reaches its minimum, p^h stays within one step below p."""
        p_h = approximate_constraint(self.p, 0.25, 3)
        for xi in np.linspace(0.0, 0.6, 61):
            self.assertLessEqual(p_h(xi), self.p(xi) + 1e-12)
            self.assertLess(self.p(xi) - p_h(xi), p_h.step + 1e-12)

    def test_coarse_lattice_rejected(self):
        """p(0) below the first lattice value cannot be approximated."""
        low = build_constraint({'kind': 'lipschitz', 'xi': [0.0, 1.0], 'p': [0.02, 0.01]})
        with self.assertRaises(ValidationError) as ctx:
            approximate_constraint(low, 0.25, 2)
        self.assertEqual(ctx.exception.code, 'constraint_lattice')
