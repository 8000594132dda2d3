"""
Piecewise-constant density profiles, weight functions and the non-local average.
"""
import bisect
import logging
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError

logger = logging.getLogger('lwr')

WEIGHT_NORM_TOL = 1e-12


@dataclass(frozen=True)
class DensityProfile:
    """
    Density on the real line with finitely many jumps.

    ``values[0]`` is the left tail, ``values[-1]`` the right tail and
    ``values[i]`` holds on [breakpoints[i-1], breakpoints[i]).
    """
    breakpoints: tuple = ()
    values: tuple = (0.0,)

    @classmethod
    def build(cls, breakpoints, values):
        """
        Normalize raw data into a profile.

        Zero-length intervals are dropped and equal adjacent values merged.

        Raises:
            ValidationError: If the lengths disagree or breakpoints decrease
        """
        breakpoints = [float(x) for x in breakpoints]
        values = [float(v) for v in values]
        if len(values) != len(breakpoints) + 1:
            raise ValidationError(
                'A profile with %(k)s breakpoints needs %(m)s values',
                code='profile_shape',
                params={'k': len(breakpoints), 'm': len(breakpoints) + 1},
            )
        xs, vs = [], [values[0]]
        for x, v in zip(breakpoints, values[1:]):
            if xs and x < xs[-1]:
                raise ValidationError('Profile breakpoints must be non-decreasing', code='profile_order')
            if xs and x == xs[-1]:
                # zero-length interval: the new value replaces it
                vs[-1] = v
                if len(vs) >= 2 and vs[-1] == vs[-2]:
                    xs.pop()
                    vs.pop()
                continue
            if v == vs[-1]:
                continue
            xs.append(x)
            vs.append(v)
        return cls(breakpoints=tuple(xs), values=tuple(vs))

    @classmethod
    def constant(cls, value):
        return cls(breakpoints=(), values=(float(value),))

    @property
    def left_tail(self):
        return self.values[0]

    @property
    def right_tail(self):
        return self.values[-1]

    def value_at(self, x):
        """Right-continuous evaluation."""
        return self.values[bisect.bisect_right(self.breakpoints, x)]

    def jumps(self):
        """Yield (x, rho_left, rho_right) for every breakpoint."""
        for i, x in enumerate(self.breakpoints):
            yield x, self.values[i], self.values[i + 1]

    def validate_range(self, R):
        if any(v < 0 or v > R for v in self.values):
            raise ValidationError('Profile values must lie in [0, %(R)s]', code='density_range', params={'R': R})

    def as_dict(self):
        return {'breakpoints': list(self.breakpoints), 'values': list(self.values)}


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """
    Non-decreasing piecewise-linear weight supported on [-i_w, 0].

    ``cumulative`` holds W at every knot, so W(x) is a closed-form quadratic
    on each piece.
    """
    knots: np.ndarray
    weights: np.ndarray
    slopes: np.ndarray = field(init=False)
    cumulative: np.ndarray = field(init=False)

    def __post_init__(self):
        knots, weights = self.knots, self.weights
        slopes = np.diff(weights) / np.diff(knots)
        areas = 0.5 * (weights[:-1] + weights[1:]) * np.diff(knots)
        object.__setattr__(self, 'slopes', slopes)
        object.__setattr__(self, 'cumulative', np.concatenate([[0.0], np.cumsum(areas)]))

    @property
    def i_w(self):
        return float(-self.knots[0])

    @property
    def w_at_zero(self):
        """w(0-), the sup norm of w."""
        return float(self.weights[-1])

    def __call__(self, x):
        return np.interp(x, self.knots, self.weights, left=0.0, right=0.0)

    def W(self, x):
        """Cumulative weight W(x) = int_{-inf}^x w; 0 below -i_w and 1 from 0 on."""
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.knots, x, side='right') - 1, 0, len(self.slopes) - 1)
        u = x - self.knots[idx]
        inside = self.cumulative[idx] + self.weights[idx] * u + 0.5 * self.slopes[idx] * u * u
        out = np.where(x <= self.knots[0], 0.0, np.where(x >= 0.0, 1.0, inside))
        return out if out.ndim else float(out)

    def describe(self):
        return {'kind': 'pwl', 'x': self.knots.tolist(), 'w': self.weights.tolist()}


def linear_weight(i_w):
    """w(x) = 2 i_w^{-2} (i_w + x) on [-i_w, 0]."""
    if not i_w > 0:
        raise ValidationError('Weight support i_w must be positive', code='weight_support')
    i_w = float(i_w)
    return WeightFunction(knots=np.array([-i_w, 0.0]), weights=np.array([0.0, 2.0 / i_w]))


def pwl_weight(x, w):
    """
    Build a piecewise-linear weight from knots and values.

    Raises:
        ValidationError: If the weight is not normalized, not non-decreasing or
            not supported on [-i_w, 0]
    """
    knots = np.asarray(x, dtype=float)
    weights = np.asarray(w, dtype=float)
    if knots.ndim != 1 or knots.shape != weights.shape or knots.size < 2:
        raise ValidationError('Weight needs matching x/w lists with at least 2 knots', code='weight_support')
    if knots[-1] != 0.0 or knots[0] >= 0.0 or np.any(np.diff(knots) <= 0):
        raise ValidationError('Weight knots must increase from -i_w < 0 to 0', code='weight_support')
    if weights[0] < 0 or np.any(np.diff(weights) < 0):
        raise ValidationError('Weight must be non-negative and non-decreasing', code='weight_monotone')
    weight = WeightFunction(knots=knots, weights=weights)
    total = weight.cumulative[-1]
    if abs(total - 1.0) > WEIGHT_NORM_TOL:
        raise ValidationError(
            'Weight integrates to %(total)s instead of 1',
            code='weight_normalization',
            params={'total': total},
        )
    return weight


def build_weight(spec):
    kind = spec.get('kind')
    if kind == 'linear':
        return linear_weight(spec['i_w'])
    if kind == 'pwl':
        return pwl_weight(spec['x'], spec['w'])
    raise ValidationError('Unknown weight kind %(kind)s', code='weight_kind', params={'kind': kind})


def nonlocal_average(rho, w):
    """
    xi = int w(x) rho(x) dx.

    Writing rho as its right tail plus one step per jump gives
    xi = rho(+inf) + sum_j (rho_l - rho_r) W(x_j).
    """
    if not rho.breakpoints:
        return float(rho.right_tail)
    xs = np.asarray(rho.breakpoints)
    vals = np.asarray(rho.values)
    return float(rho.right_tail + np.dot(vals[:-1] - vals[1:], w.W(xs)))


def _quantize_value(v, nodes, prev, lookahead, rho_bar, tol):
    j = int(np.searchsorted(nodes, v))
    for k in (j - 1, j):
        if 0 <= k < len(nodes) and abs(nodes[k] - v) <= tol:
            return float(nodes[k])
    lo, hi = float(nodes[j - 1]), float(nodes[j])
    if prev is None:
        # Lean toward the first later value that leaves the open cell
        for later in lookahead:
            if later >= hi:
                return hi
            if later <= lo:
                return lo
        if v - lo == hi - v:
            return hi if v < rho_bar else lo
        return lo if v - lo < hi - v else hi
    if prev < lo:
        return lo
    if prev > hi:
        return hi
    return prev


def quantize_to_mesh(rho0, mesh, rho_bar):
    """
    Map every value of rho0 to a node of M^n.

    Values are taken left to right; each one goes to a node of the mesh cell
    containing it, keeping the previous node whenever that node bounds the
    cell. The result never increases TV(Psi).
    """
    tol = 1e-12 * mesh.R
    nodes = mesh.nodes
    values = list(rho0.values)
    out = []
    prev = None
    for i, v in enumerate(values):
        prev = _quantize_value(v, nodes, prev, values[i + 1:], rho_bar, tol)
        out.append(prev)
    quantized = DensityProfile.build(rho0.breakpoints, out)
    if rho0.left_tail == 0 and rho0.right_tail == 0:
        before, after = mass(rho0), mass(quantized)
        if after > before:
            logger.warning(f"Quantization increased the L1 norm from {before!r} to {after!r}")
    return quantized


def tv_psi(rho, psi_map):
    """Total variation of Psi(rho): the sum of |Psi| jumps."""
    return float(sum(abs(psi_map(r) - psi_map(l)) for _, l, r in rho.jumps()))


def mass(rho):
    """
    Integral of rho over its compact support.

    Raises:
        ValidationError: If either tail is non-zero
    """
    if rho.left_tail != 0 or rho.right_tail != 0:
        raise ValidationError('Mass is undefined for non-zero tails', code='nonzero_tails')
    xs = rho.breakpoints
    return float(sum(rho.values[i + 1] * (xs[i + 1] - xs[i]) for i in range(len(xs) - 1)))


def l1_distance(a, b, lo=None, hi=None):
    """
    Exact L1 distance between two profiles, optionally restricted to [lo, hi].

    Raises:
        ValidationError: If the window is unbounded and the tails differ
    """
    bounded = lo is not None and hi is not None
    if not bounded and (a.left_tail != b.left_tail or a.right_tail != b.right_tail):
        raise ValidationError('Profiles with different tails are at infinite L1 distance', code='nonzero_tails')
    cuts = sorted(set(a.breakpoints) | set(b.breakpoints) | ({lo, hi} if bounded else set()))
    if bounded:
        cuts = [x for x in cuts if lo <= x <= hi]
    total = 0.0
    for x0, x1 in zip(cuts, cuts[1:]):
        mid = 0.5 * (x0 + x1)
        total += abs(a.value_at(mid) - b.value_at(mid)) * (x1 - x0)
    return total


def restrict_mass(rho, lo, hi):
    """Integral of rho over [lo, hi]."""
    cuts = [lo] + [x for x in rho.breakpoints if lo < x < hi] + [hi]
    return float(sum(rho.value_at(0.5 * (x0 + x1)) * (x1 - x0) for x0, x1 in zip(cuts, cuts[1:])))


class XiTrace:
    """Samples of t -> (xi(t), q(t))."""

    def __init__(self):
        self.times = []
        self.xi = []
        self.q = []

    def record(self, t, xi, q):
        self.times.append(float(t))
        self.xi.append(float(xi))
        self.q.append(float(q))

    def __len__(self):
        return len(self.times)

    def rows(self):
        return list(zip(self.times, self.xi, self.q))

    def within(self, R, tol=1e-12):
        return all(-tol <= x <= R + tol for x in self.xi)
