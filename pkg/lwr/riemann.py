"""
Riemann solvers: classical fans on the flux mesh, the constrained solver at
x = 0, the case classification of constrained data and the extremal solvers
R^q and R^p.

Solvers run in one of two modes. In mesh mode (``exact=False``) every state
must be a node of M^n and speeds come from f^n, so lattice bookkeeping stays
exact. In exact mode states may be arbitrary: rarefactions are split at the
interior mesh nodes and every front moves at the chord speed of the exact
flux.
"""
import logging
from dataclasses import dataclass
from typing import Optional

from django.core.exceptions import ValidationError

from .exceptions import TrackingError

logger = logging.getLogger('lwr')

SHOCK = 'shock'
FAN = 'fan'
NONCLASSICAL = 'nonclassical'

# Speeds this small (relative to Lip f) are stationary
SPEED_SNAP = 1e-13
STATE_TOL = 1e-12

CLASSICAL_LABELS = ('C1', 'C2', 'C3', 'C4', 'C5')
NONCLASSICAL_LABELS = ('N1', 'N2', 'N3', 'N4a', 'N4b', 'N5a', 'N5b')
PATHOLOGICAL_LABELS = ('CN2', 'CN3', 'NNN4', 'CNN5', 'NNN5')
CASE_LABELS = CLASSICAL_LABELS + NONCLASSICAL_LABELS + PATHOLOGICAL_LABELS

RQ = 'rq'
RP = 'rp'
POLICIES = (RQ, RP)


@dataclass(frozen=True)
class Front:
    speed: float
    rho_left: float
    rho_right: float
    kind: str


@dataclass(frozen=True)
class WaveFan:
    """
    Self-similar solution of a Riemann problem: fronts ordered by speed.

    ``level`` is the constraint level carried by the nonclassical front, or
    None for a classical fan. ``trace_left``/``trace_right`` are the states
    at x = 0- and x = 0+ for t > 0.
    """
    rho_left: float
    rho_right: float
    fronts: tuple
    level: Optional[float]
    trace_left: float
    trace_right: float
    exit_flux: float

    @property
    def is_empty(self):
        return not self.fronts

    @property
    def nonclassical(self):
        for front in self.fronts:
            if front.kind == NONCLASSICAL:
                return front
        return None


def _speed_flux(f_n, exact):
    return f_n.flux if exact and hasattr(f_n, 'flux') else f_n


def _chord(flux, a, b):
    return float((flux(a) - flux(b)) / (a - b))


def _assemble(flux, rho_l, rho_r, fronts, level=None):
    trace_left = trace_right = rho_l
    for front in fronts:
        if front.speed < 0:
            trace_left = trace_right = front.rho_right
        elif front.speed == 0:
            trace_right = front.rho_right
        else:
            break
    has_nc = any(front.kind == NONCLASSICAL for front in fronts)
    exit_flux = level if has_nc else float(flux(trace_left))
    return WaveFan(
        rho_left=rho_l,
        rho_right=rho_r,
        fronts=tuple(fronts),
        level=level if has_nc else None,
        trace_left=trace_left,
        trace_right=trace_right,
        exit_flux=exit_flux,
    )


def _snap(speed, lip):
    return 0.0 if abs(speed) <= SPEED_SNAP * max(1.0, lip) else speed


def _merge_equal_speeds(flux, fronts, lip):
    merged = []
    for front in fronts:
        if merged and abs(merged[-1].speed - front.speed) <= STATE_TOL * max(1.0, lip):
            last = merged.pop()
            a, b = last.rho_left, front.rho_right
            front = Front(_snap(_chord(flux, a, b), lip), a, b, FAN)
        merged.append(front)
    return merged


def classical_riemann(f_n, rho_l, rho_r, exact=False):
    """
    Solve the classical Riemann problem for the piecewise-linear flux.

    An increasing jump is a single shock; a decreasing jump is a fan of
    fronts between consecutive mesh nodes.

    Raises:
        ValidationError: In mesh mode, if a state is not a node of M^n
    """
    flux = _speed_flux(f_n, exact)
    lip = flux.lip
    if rho_l == rho_r:
        return _assemble(flux, rho_l, rho_r, [])
    mesh = f_n.mesh
    if not exact:
        il, ir = mesh.node_index(rho_l), mesh.node_index(rho_r)
        if il is None or ir is None:
            raise ValidationError(
                'States %(l)s, %(r)s are not nodes of M^%(n)s',
                code='mesh_closure',
                params={'l': rho_l, 'r': rho_r, 'n': mesh.n},
            )
        rho_l, rho_r = float(mesh.nodes[il]), float(mesh.nodes[ir])
    if rho_l < rho_r:
        fronts = [Front(_snap(_chord(flux, rho_l, rho_r), lip), rho_l, rho_r, SHOCK)]
        return _assemble(flux, rho_l, rho_r, fronts)
    if exact:
        inner = [float(x) for x in mesh.interior_nodes(rho_r, rho_l)[::-1]]
        states = [rho_l] + inner + [rho_r]
    else:
        states = [float(x) for x in mesh.nodes[ir:il + 1][::-1]]
    fronts = [Front(_snap(_chord(flux, a, b), lip), a, b, FAN) for a, b in zip(states, states[1:])]
    return _assemble(flux, rho_l, rho_r, _merge_equal_speeds(flux, fronts, lip))


def _normalize(fronts):
    """Merge the stationary fronts into one and check the side of every other front."""
    left = [fr for fr in fronts if fr.speed < 0]
    still = [fr for fr in fronts if fr.speed == 0]
    right = [fr for fr in fronts if fr.speed > 0]
    if fronts[:len(left)] != left or fronts[len(left) + len(still):] != right:
        logger.error(f"Constrained fan out of order: {fronts}")
        raise TrackingError('Constrained fan has a front on the wrong side of x=0')
    middle = []
    if still:
        a, b = still[0].rho_left, still[-1].rho_right
        if a != b:
            kind = NONCLASSICAL if a > b else SHOCK
            middle = [Front(0.0, a, b, kind)]
    return left + middle + right


def nonclassical_fan(f_n, rho_l, rho_r, level, exact=False):
    """
    R[rho_l, rho_hat(level)] for x < 0, a stationary nonclassical shock from
    rho_hat(level) to rho_check(level), then R[rho_check(level), rho_r].
    """
    flux = _speed_flux(f_n, exact)
    check, hat = flux.branches(level)
    tol = STATE_TOL * flux.R
    if abs(hat - rho_l) <= tol:
        hat = rho_l
    if abs(check - rho_r) <= tol:
        check = rho_r
    if not exact:
        # Lattice levels map onto mesh nodes
        mesh = f_n.mesh
        for rho in (hat, check):
            if mesh.node_index(rho) is None:
                raise ValidationError(
                    'Level %(q)s is not on the lattice of M^%(n)s',
                    code='mesh_closure',
                    params={'q': level, 'n': mesh.n},
                )
    left = classical_riemann(f_n, rho_l, hat, exact)
    right = classical_riemann(f_n, check, rho_r, exact)
    fronts = list(left.fronts) + [Front(0.0, hat, check, NONCLASSICAL)] + list(right.fronts)
    return _assemble(flux, rho_l, rho_r, _normalize(fronts), level)


def constrained_local_riemann(f_n, rho_l, rho_r, q, exact=False):
    """
    Constrained Riemann solver at x = 0 for a frozen efficiency q.

    Returns the classical fan when its flux at x = 0 does not exceed q,
    otherwise the nonclassical fan carrying exactly q through the exit.

    Raises:
        ValidationError: If q is not positive
    """
    if not q > 0:
        raise ValidationError('Exit efficiency must be positive (got %(q)s)', code='constraint_positive',
                              params={'q': q})
    classical = classical_riemann(f_n, rho_l, rho_r, exact)
    if classical.exit_flux <= q + f_n.tol:
        return classical
    return nonclassical_fan(f_n, rho_l, rho_r, q, exact)


def classify(flux, p, rho_l, rho_r):
    """
    Case label of constrained Riemann data.

    ``p`` is any constraint with one-sided accessors; both are evaluated at
    rho_l, the value xi takes on constant left data. Conditions are tested in
    the order C1..C5, N1..N5b, then the pathological cases, so C labels win
    on shared boundaries.
    """
    tol = flux.tol
    fl, fr, fb = float(flux(rho_l)), float(flux(rho_r)), flux.f_max
    pm, pp = p.p_minus(rho_l), p.p_plus(rho_l)
    rho_bar = flux.rho_bar

    def le(a, b):
        return a <= b + tol

    def lt(a, b):
        return a < b - tol

    def eq(a, b):
        return abs(a - b) <= tol

    jump = not eq(pm, pp)
    if rho_l < rho_r:
        if not le(fl, fr):
            if le(fr, pp):
                return 'C1'
            return 'N1'
        if le(fl, pp):
            return 'C2'
        if lt(pm, fl):
            return 'N2'
        return 'CN2'
    if rho_l <= rho_bar:
        if le(fl, pp):
            return 'C3'
        if lt(pm, fl):
            return 'N3'
        return 'CN3'
    if rho_r <= rho_bar:
        if eq(fb, pp):
            return 'C4'
        if not eq(fb, pm):
            if lt(fl, pp):
                return 'N4a'
            if lt(pm, fl):
                return 'N4b'
        if jump and le(pp, fl) and le(fl, pm):
            return 'NNN4'
        return 'N4a' if eq(pm, fb) else 'N4b'
    if le(fr, pm) and lt(fl, pp):
        return 'C5'
    if lt(pm, fr) and lt(fl, pp):
        return 'N5a'
    if lt(pm, fl):
        return 'N5b'
    if le(fr, pm) and jump and le(pp, fl):
        return 'CNN5'
    if rho_r < rho_l and lt(pm, fr) and le(fl, pm) and le(pp, fl) and jump:
        return 'NNN5'
    return 'N5b'


def _definition_level(label, pm, pp, policy):
    """Constraint level chosen by R^q or R^p; None means the classical fan."""
    if label in CLASSICAL_LABELS:
        return None
    if label in NONCLASSICAL_LABELS:
        return pm if label in ('N4a', 'N5a') else pp
    if policy == RP:
        return pp
    if label in ('CN2', 'CN3', 'CNN5'):
        return None
    return pm


def solve_policy(f_n, p, rho_l, rho_r, policy=RQ, exact=True):
    """
    Solve constrained Riemann data with R^q or R^p.

    Returns:
        tuple: (WaveFan, case label)
    """
    if policy not in POLICIES:
        raise ValidationError('Unknown solver policy %(policy)s', code='policy', params={'policy': policy})
    flux = _speed_flux(f_n, exact)
    label = classify(flux, p, rho_l, rho_r)
    level = _definition_level(label, p.p_minus(rho_l), p.p_plus(rho_l), policy)
    if level is None:
        return classical_riemann(f_n, rho_l, rho_r, exact), label
    return nonclassical_fan(f_n, rho_l, rho_r, level, exact), label


def solve_Rq(f_n, p, rho_l, rho_r, exact=True):
    return solve_policy(f_n, p, rho_l, rho_r, RQ, exact)[0]


def solve_Rp(f_n, p, rho_l, rho_r, exact=True):
    return solve_policy(f_n, p, rho_l, rho_r, RP, exact)[0]


@dataclass(frozen=True)
class LocalSolution:
    level: Optional[float]
    fan: WaveFan

    @property
    def is_classical(self):
        return self.level is None


def enumerate_local_solutions(f_n, p, rho_l, rho_r, exact=True):
    """
    All locally admissible self-similar solutions of constrained data.

    A singleton on C and N data; on pathological data the classical fan
    (when admissible) and each distinct level among p(rho_L+), f(rho_L) and
    p(rho_L-) allowed by the case.
    """
    flux = _speed_flux(f_n, exact)
    label = classify(flux, p, rho_l, rho_r)
    pm, pp = p.p_minus(rho_l), p.p_plus(rho_l)
    fl = float(flux(rho_l))
    if label in CLASSICAL_LABELS:
        candidates = [None]
    elif label in NONCLASSICAL_LABELS:
        candidates = [_definition_level(label, pm, pp, RQ)]
    elif label in ('CN2', 'CN3'):
        candidates = [None, pp]
    elif label == 'CNN5':
        candidates = [None, pp, fl]
    else:
        candidates = [pp, fl, pm]
    solutions = []
    seen = []
    for level in candidates:
        if level is not None and any(s is not None and abs(s - level) <= flux.tol for s in seen):
            continue
        seen.append(level)
        if level is None:
            fan = classical_riemann(f_n, rho_l, rho_r, exact)
        else:
            fan = nonclassical_fan(f_n, rho_l, rho_r, level, exact)
        solutions.append(LocalSolution(level=level, fan=fan))
    return solutions
