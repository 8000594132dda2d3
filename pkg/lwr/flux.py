"""
Bell-shaped fluxes, the flux mesh M^n and the piecewise-linear flux f^n.

Every flux-like object in this module exposes the same small surface so the
Riemann solvers and engines can take either the exact flux or its mesh
approximation:

    R, rho_bar, f_max, lip      scalars
    flux(rho)                   evaluation (scalars or numpy arrays)
    branches(p)                 (rho_check, rho_hat) with f = p on both branches
"""
import bisect
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError
from scipy.optimize import brentq

logger = logging.getLogger('lwr')

# Relative tolerance for comparisons in flux space (multiplied by f_max)
LEVEL_TOL = 1e-12
# Absolute tolerance in density for the tabulated inverse branches
INVERSE_XTOL = 1e-13

LWR = 'lwr'
TABLE = 'table'


@dataclass(frozen=True)
class FluxModel:
    """
    Concave bell-shaped flux on [0, R].

    Either the closed-form LWR flux v_max * rho * (1 - rho / R) or a
    strictly concave table interpolated linearly between samples.
    """
    kind: str
    R: float
    rho_bar: float
    f_max: float
    lip: float
    v_max: float = 0.0
    rho_samples: tuple = ()
    f_samples: tuple = ()

    def __call__(self, rho):
        if self.kind == LWR:
            return self.v_max * rho * (1.0 - rho / self.R)
        return np.interp(rho, self.rho_samples, self.f_samples)

    @property
    def tol(self):
        return LEVEL_TOL * self.f_max

    def branches(self, p):
        """
        Return (rho_check(p), rho_hat(p)), the sub- and super-critical densities with flux p.

        Raises:
            ValidationError: If p lies outside [0, f_max]
        """
        p = _checked_level(self, p)
        if p >= self.f_max:
            return self.rho_bar, self.rho_bar
        if p <= 0.0:
            return 0.0, self.R
        if self.kind == LWR:
            root = math.sqrt(1.0 - p / self.f_max)
            half = 0.5 * self.R
            return half * (1.0 - root), half * (1.0 + root)
        return (
            _bracketed_root(self, p, 0.0, self.rho_bar),
            _bracketed_root(self, p, self.rho_bar, self.R),
        )

    def characteristic_speed(self, rho):
        """f'(rho+), the right derivative; tables use the slope of the sample interval starting at rho."""
        if self.kind == LWR:
            return self.v_max * (1.0 - 2.0 * rho / self.R)
        xs, fs = self.rho_samples, self.f_samples
        i = min(max(bisect.bisect_right(xs, rho) - 1, 0), len(xs) - 2)
        return (fs[i + 1] - fs[i]) / (xs[i + 1] - xs[i])

    def describe(self):
        if self.kind == LWR:
            return {'kind': LWR, 'v_max': self.v_max, 'R': self.R}
        return {'kind': TABLE, 'rho': list(self.rho_samples), 'f': list(self.f_samples)}


def _checked_level(flux, p):
    if p < -flux.tol or p > flux.f_max + flux.tol:
        raise ValidationError(
            'Flux level %(p)s outside [0, %(f_max)s]',
            code='level_range',
            params={'p': p, 'f_max': flux.f_max},
        )
    return min(max(p, 0.0), flux.f_max)


def _bracketed_root(flux, p, a, b):
    try:
        return brentq(lambda rho: flux(rho) - p, a, b, xtol=INVERSE_XTOL)
    except ValueError as exc:
        logger.error(f"Inverse branch root not bracketed on [{a}, {b}] for level {p}")
        raise RuntimeError(f"Cannot invert flux at level {p}") from exc


def build_lwr_flux(v_max, R):
    """
    Build the LWR flux f(rho) = v_max * rho * (1 - rho / R).

    Raises:
        ValidationError: If v_max or R is not positive
    """
    if not (v_max > 0 and R > 0):
        raise ValidationError(
            'LWR flux needs v_max > 0 and R > 0 (got %(v)s, %(R)s)',
            code='flux_parameters',
            params={'v': v_max, 'R': R},
        )
    v_max, R = float(v_max), float(R)
    return FluxModel(kind=LWR, R=R, rho_bar=0.5 * R, f_max=0.25 * v_max * R, lip=v_max, v_max=v_max)


def build_table_flux(rho, f):
    """
    Build a tabulated flux from strictly concave samples.

    The samples must start at (0, 0), end at (R, 0), be strictly positive in
    between, and have strictly decreasing non-zero segment slopes, so that the
    interpolant is bell-shaped with a single peak at a sample.

    Raises:
        ValidationError: If the samples violate the bell-shape assumption
    """
    rho = np.asarray(rho, dtype=float)
    f = np.asarray(f, dtype=float)
    if rho.ndim != 1 or rho.shape != f.shape or rho.size < 3:
        raise ValidationError('Flux table needs matching rho/f lists with at least 3 samples', code='flux_table')
    if rho[0] != 0.0 or f[0] != 0.0 or f[-1] != 0.0:
        raise ValidationError('Flux table must start at (0, 0) and end at (R, 0)', code='bell_shape')
    if np.any(np.diff(rho) <= 0):
        raise ValidationError('Flux table densities must be strictly increasing', code='flux_table')
    if np.any(f[1:-1] <= 0):
        raise ValidationError('Flux table must be positive inside (0, R)', code='bell_shape')
    slopes = np.diff(f) / np.diff(rho)
    if np.any(np.diff(slopes) >= 0):
        raise ValidationError('Flux table must be strictly concave', code='bell_shape')
    if np.any(slopes == 0):
        raise ValidationError('Flux table has a flat segment; the peak must be unique', code='bell_shape')
    peak = int(np.argmax(f))
    return FluxModel(
        kind=TABLE,
        R=float(rho[-1]),
        rho_bar=float(rho[peak]),
        f_max=float(f[peak]),
        lip=float(np.max(np.abs(slopes))),
        rho_samples=tuple(float(v) for v in rho),
        f_samples=tuple(float(v) for v in f),
    )


def build_flux(spec):
    """Build a flux from its scenario description."""
    kind = spec.get('kind')
    if kind == LWR:
        return build_lwr_flux(spec['v_max'], spec['R'])
    if kind == TABLE:
        return build_table_flux(spec['rho'], spec['f'])
    raise ValidationError('Unknown flux kind %(kind)s', code='flux_kind', params={'kind': kind})


@dataclass(frozen=True, eq=False)
class FluxMesh:
    """
    The mesh M^n = f^{-1}(2^{-n} f_max N).

    Nodes are ordered by density. The left branch holds nodes 0 .. 2^n - 1,
    rho_bar sits at index 2^n and the right branch fills the rest, so the
    flux level of node j is level_index[j] * step.
    """
    n: int
    step: float
    nodes: np.ndarray
    level_index: np.ndarray
    R: float

    @property
    def top(self):
        return 1 << self.n

    @property
    def levels(self):
        return np.arange(self.top + 1) * self.step

    def __len__(self):
        return len(self.nodes)

    def node_index(self, rho):
        """Return the index of the node equal to rho (within 1e-12 R), or None."""
        tol = LEVEL_TOL * self.R
        j = int(np.searchsorted(self.nodes, rho))
        for k in (j - 1, j):
            if 0 <= k < len(self.nodes) and abs(self.nodes[k] - rho) <= tol:
                return k
        return None

    def interior_nodes(self, lo, hi):
        """Nodes strictly between lo and hi (endpoint tolerance 1e-12 R), ascending."""
        tol = LEVEL_TOL * self.R
        a = int(np.searchsorted(self.nodes, lo + tol, side='right'))
        b = int(np.searchsorted(self.nodes, hi - tol, side='left'))
        return self.nodes[a:b]

    def psi_index(self, j):
        """Psi of node j in lattice units (signed distance from the top level)."""
        return j - self.top


def build_mesh(flux, n):
    """
    Build M^n for a flux by inverting every lattice level on both branches.

    Raises:
        ValidationError: If n < 1
    """
    if n < 1:
        raise ValidationError('Mesh refinement n must be at least 1', code='mesh_refinement')
    top = 1 << n
    step = flux.f_max / top
    left = [flux.branches(k * step)[0] for k in range(top)]
    right = [flux.branches(k * step)[1] for k in range(top - 1, -1, -1)]
    nodes = np.array(left + [flux.rho_bar] + right, dtype=float)
    nodes[0], nodes[-1] = 0.0, flux.R
    if np.any(np.diff(nodes) <= 0):
        logger.error(f"Mesh M^{n} is not strictly sorted")
        raise RuntimeError(f"Degenerate mesh at n={n}")
    level_index = np.concatenate([np.arange(top), [top], np.arange(top - 1, -1, -1)])
    logger.debug(f"Built mesh M^{n} with {len(nodes)} nodes")
    return FluxMesh(n=n, step=step, nodes=nodes, level_index=level_index, R=flux.R)


@dataclass(frozen=True, eq=False)
class PiecewiseLinearFlux:
    """
    f^n: the continuous piecewise-linear interpolant of f through M^n.

    Values at nodes are exact lattice multiples, so flux comparisons on
    mesh states are exact.
    """
    flux: FluxModel
    mesh: FluxMesh
    values: np.ndarray = field(init=False)
    slopes: np.ndarray = field(init=False)

    def __post_init__(self):
        values = self.mesh.level_index * self.mesh.step
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'slopes', np.diff(values) / np.diff(self.mesh.nodes))

    @property
    def R(self):
        return self.flux.R

    @property
    def rho_bar(self):
        return self.flux.rho_bar

    @property
    def f_max(self):
        return self.flux.f_max

    @property
    def tol(self):
        return self.flux.tol

    @property
    def lip(self):
        return float(np.max(np.abs(self.slopes)))

    def __call__(self, rho):
        return np.interp(rho, self.mesh.nodes, self.values)

    def branches(self, p):
        """Inverse branches of f^n; lattice levels map to mesh nodes exactly."""
        p = _checked_level(self, p)
        step, top = self.mesh.step, self.mesh.top
        k = round(p / step)
        if abs(p - k * step) <= self.tol:
            return float(self.mesh.nodes[k]), float(self.mesh.nodes[2 * top - k])
        # Off-lattice level: invert the linear segment on each branch
        k = int(p // step)
        lo = (k, k + 1)
        hi = (2 * top - k - 1, 2 * top - k)
        return self._invert(p, *lo), self._invert(p, *hi)

    def _invert(self, p, i, j):
        x0, x1 = self.mesh.nodes[i], self.mesh.nodes[j]
        y0, y1 = self.values[i], self.values[j]
        return float(x0 + (p - y0) * (x1 - x0) / (y1 - y0))


def piecewise_linear_flux(flux, n):
    return PiecewiseLinearFlux(flux=flux, mesh=build_mesh(flux, n))


def shock_speed(flux, rho_l, rho_r):
    """
    Rankine-Hugoniot speed between two distinct states.

    Raises:
        ValidationError: If the states coincide
    """
    if rho_l == rho_r:
        raise ValidationError('Shock speed needs distinct states', code='equal_states')
    return float((flux(rho_l) - flux(rho_r)) / (rho_l - rho_r))


def rho_check_hat(flux, p):
    """Return (rho_check(p), rho_hat(p)) for a flux or its mesh approximation."""
    return flux.branches(p)


class PsiMap:
    """
    Psi(rho) = sign(rho - rho_bar) * (f_max - f(rho)), strictly increasing on [0, R].
    """

    def __init__(self, flux):
        self.flux = flux

    def __call__(self, rho):
        f = self.flux
        if rho < -LEVEL_TOL * f.R or rho > f.R * (1 + LEVEL_TOL):
            raise ValidationError('Density %(rho)s outside [0, R]', code='density_range', params={'rho': rho})
        return float(np.sign(rho - f.rho_bar) * (f.f_max - f(rho)))

    def inverse(self, v):
        f = self.flux
        if abs(v) > f.f_max + f.tol:
            raise ValidationError('Psi value %(v)s outside [-f_max, f_max]', code='psi_range', params={'v': v})
        if v == 0:
            return f.rho_bar
        check, hat = f.branches(f.f_max - abs(v))
        return check if v < 0 else hat


def psi(psi_map, rho):
    return psi_map(rho)


def psi_inverse(psi_map, v):
    return psi_map.inverse(v)
