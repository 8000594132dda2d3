"""
Exit efficiency constraints p(xi).

All constraint objects expose one-sided accessors ``p_minus(xi)`` and
``p_plus(xi)``; they differ only at the thresholds of a step constraint.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError

logger = logging.getLogger('lwr')

THRESHOLD_TOL = 1e-12
LATTICE_TOL = 1e-9


@dataclass(frozen=True)
class StepConstraint:
    """
    Decreasing step function: p_0 on [0, xi_1), p_1 on [xi_1, xi_2), ...

    At a threshold only the two one-sided values are exposed.
    """
    thresholds: tuple
    values: tuple

    def __post_init__(self):
        if len(self.values) != len(self.thresholds) + 1:
            raise ValidationError('A step constraint with m thresholds needs m+1 values', code='constraint_shape')
        if any(x <= 0 for x in self.thresholds) or any(
                b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValidationError('Thresholds must be positive and strictly increasing', code='constraint_thresholds')
        if any(v <= 0 for v in self.values) or any(b >= a for a, b in zip(self.values, self.values[1:])):
            raise ValidationError('Step values must be positive and strictly decreasing', code='constraint_values')

    kind = 'step'

    def index_minus(self, xi):
        return sum(1 for x in self.thresholds if x < xi - THRESHOLD_TOL)

    def index_plus(self, xi):
        return sum(1 for x in self.thresholds if x <= xi + THRESHOLD_TOL)

    def p_minus(self, xi):
        return self.values[self.index_minus(xi)]

    def p_plus(self, xi):
        return self.values[self.index_plus(xi)]

    def validate_against(self, flux):
        if self.values[0] > flux.f_max + flux.tol:
            raise ValidationError('Constraint exceeds f(rho_bar)', code='constraint_values')
        if self.thresholds and self.thresholds[-1] >= flux.R:
            raise ValidationError('Thresholds must lie in (0, R)', code='constraint_thresholds')

    def describe(self):
        return {'kind': 'step', 'xi': list(self.thresholds), 'p': list(self.values)}


@dataclass(frozen=True, eq=False)
class LipschitzConstraint:
    """Non-increasing Lipschitz p, linear between samples and constant beyond them."""
    xi: np.ndarray
    p: np.ndarray

    kind = 'lipschitz'

    def __post_init__(self):
        if self.xi.ndim != 1 or self.xi.shape != self.p.shape or self.xi.size < 1:
            raise ValidationError('Lipschitz constraint needs matching xi/p lists', code='constraint_shape')
        if np.any(np.diff(self.xi) <= 0):
            raise ValidationError('Constraint samples must be strictly increasing in xi', code='constraint_thresholds')
        if np.any(self.p <= 0) or np.any(np.diff(self.p) > 0):
            raise ValidationError('Constraint must be positive and non-increasing', code='constraint_values')

    @property
    def lip(self):
        if self.xi.size < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.p) / np.diff(self.xi))))

    @property
    def minimum(self):
        return float(self.p[-1])

    def __call__(self, xi):
        return float(np.interp(xi, self.xi, self.p))

    def p_minus(self, xi):
        return self(xi)

    def p_plus(self, xi):
        return self(xi)

    def level_drop(self, level):
        """sup{xi : p(xi) >= level}, for a level above the minimum of p."""
        xs, ps = self.xi, self.p
        if ps[0] < level:
            return 0.0
        for i in range(len(ps) - 1):
            if ps[i + 1] < level:
                return float(xs[i] + (ps[i] - level) * (xs[i + 1] - xs[i]) / (ps[i] - ps[i + 1]))
        return math.inf

    def validate_against(self, flux):
        if self.p[0] > flux.f_max + flux.tol:
            raise ValidationError('Constraint exceeds f(rho_bar)', code='constraint_values')

    def describe(self):
        return {'kind': 'lipschitz', 'xi': self.xi.tolist(), 'p': self.p.tolist()}


@dataclass(frozen=True)
class FrozenLevels:
    """Constraint frozen at two one-sided levels, independent of xi."""
    minus: float
    plus: float

    def p_minus(self, xi):
        return self.minus

    def p_plus(self, xi):
        return self.plus


def build_constraint(spec):
    kind = spec.get('kind')
    if kind == 'step':
        return StepConstraint(
            thresholds=tuple(float(x) for x in spec['xi']),
            values=tuple(float(v) for v in spec['p']),
        )
    if kind == 'lipschitz':
        return LipschitzConstraint(xi=np.asarray(spec['xi'], dtype=float), p=np.asarray(spec['p'], dtype=float))
    raise ValidationError('Unknown constraint kind %(kind)s', code='constraint_kind', params={'kind': kind})


@dataclass(frozen=True)
class StepConstraintApprox:
    """
    p^h: the largest value of the lattice 2^{-h} f_max N below p, kept above
    the lowest lattice value met by p.

    ``thresholds[i]`` is where the level drops from ``k_top - i`` to
    ``k_top - i - 1``; levels are stored as lattice indices so that updates
    compare exactly.
    """
    h: int
    step: float
    k_top: int
    k_bottom: int
    thresholds: tuple
    p_at_zero: float

    def level_index(self, xi):
        """Lattice index of p^h(xi), right-continuous at thresholds."""
        return self.k_top - sum(1 for x in self.thresholds if x <= xi)

    def __call__(self, xi):
        return self.level_index(xi) * self.step

    def mesh_index(self, xi, n):
        """Index of p^h(xi) on the finer lattice 2^{-n} f_max N."""
        return self.level_index(xi) << (n - self.h)

    @property
    def snap_deviation(self):
        """How far p(0) sits above the top lattice level."""
        return self.p_at_zero - self.k_top * self.step

    def as_step_constraint(self):
        values = tuple(k * self.step for k in range(self.k_top, self.k_bottom - 1, -1))
        return StepConstraint(thresholds=self.thresholds, values=values)


def approximate_constraint(p, f_max, h):
    """
    Build p^h from a Lipschitz constraint.

    Raises:
        ValidationError: If p(0) lies below the first lattice value 2^{-h} f_max
    """
    step = f_max / (1 << h)
    p0 = p(0.0)
    k_top = math.floor(p0 / step + LATTICE_TOL)
    k_bottom = max(1, math.ceil(p.minimum / step - LATTICE_TOL))
    if k_top < 1:
        raise ValidationError(
            'p(0) = %(p0)s is below the lattice step %(step)s; refine h',
            code='constraint_lattice',
            params={'p0': p0, 'step': step},
        )
    k_bottom = min(k_bottom, k_top)
    thresholds = []
    for k in range(k_top, k_bottom, -1):
        thresholds.append(p.level_drop((k - LATTICE_TOL) * step))
    while thresholds and thresholds[0] <= 0:
        thresholds.pop(0)
        k_top -= 1
    approx = StepConstraintApprox(
        h=h, step=step, k_top=k_top, k_bottom=k_bottom, thresholds=tuple(thresholds), p_at_zero=p0,
    )
    if approx.snap_deviation > 0:
        logger.debug(f"p^h snaps p(0)={p0!r} down to {k_top * step!r}")
    return approx
