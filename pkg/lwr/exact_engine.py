"""
Event-driven tracker for a step constraint.

Fronts are tracked exactly under the true flux (rarefactions are split into
fans at the nodes of a mesh). Besides collisions and fronts reaching the
exit, the times at which xi(t) crosses a threshold of p are events: the
exit level changes there and the Riemann problem at x = 0 is solved again.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError

from .constraints import FrozenLevels
from .flux import piecewise_linear_flux
from .profile import nonlocal_average, restrict_mass
from .riemann import FAN, POLICIES, RP, RQ, classify, constrained_local_riemann, solve_policy
from .tracking import COLLISION, FrontTracker, position_tol
from .trajectory import EventRecord, StateSample, Trajectory

logger = logging.getLogger('lwr')

UP = 'up'
DOWN = 'down'

# Relative guard on the discriminant: smaller values are tangencies
DISCRIMINANT_TOL = 1e-12
# Roots this close to the window start belong to the previous crossing
CROSSING_EPS = 1e-12
DEFAULT_SAMPLES = 500


@dataclass(frozen=True)
class Crossing:
    time: float
    index: int
    direction: str


@dataclass(frozen=True)
class XiPiece:
    """xi on [start, end] as c0 + c1 u + c2 u^2 with u = t - start."""
    start: float
    end: float
    c0: float
    c1: float
    c2: float

    def __call__(self, t):
        u = t - self.start
        return self.c0 + self.c1 * u + self.c2 * u * u


def _piece_coefficients(w, piece, x0, speed):
    """W(x0 + speed * tau) on a weight piece as polynomial coefficients in tau."""
    n_pieces = len(w.slopes)
    below = piece < 0
    above = piece >= n_pieces
    i = np.clip(piece, 0, n_pieces - 1)
    d0 = x0 - w.knots[i]
    c0 = w.cumulative[i] + w.weights[i] * d0 + 0.5 * w.slopes[i] * d0 * d0
    c1 = (w.weights[i] + w.slopes[i] * d0) * speed
    c2 = 0.5 * w.slopes[i] * speed * speed
    c0 = np.where(below, 0.0, np.where(above, 1.0, c0))
    c1 = np.where(below | above, 0.0, c1)
    c2 = np.where(below | above, 0.0, c2)
    return c0, c1, c2


def xi_pieces(state, w, horizon, t=None):
    """
    xi(t) on [t, t + horizon] as consecutive quadratic pieces.

    No front may reach x = 0 inside the window, which holds up to the next
    tracker event. Pieces break where a front crosses a knot of w.
    """
    t = state.now if t is None else t
    if horizon <= 0:
        xi = state.nonlocal_average(w, t)
        return [XiPiece(t, t, xi, 0.0, 0.0)]
    reach = state.f_n.flux.lip * horizon
    a, b = state.locate(t, -w.i_w - reach - position_tol(w.i_w + reach), -position_tol(0.0))
    base = state.state_left_of(b)
    fronts = state.fronts[a:b]
    if not fronts:
        return [XiPiece(t, t + horizon, base, 0.0, 0.0)]
    x0 = np.array([fr.position(t) for fr in fronts])
    speed = np.array([fr.speed for fr in fronts])
    jump = np.array([fr.rho_left - fr.rho_right for fr in fronts])

    # A front sitting on a knot and moving left is already in the piece below
    piece = np.where(
        speed < 0,
        np.searchsorted(w.knots, x0, side='left') - 1,
        np.searchsorted(w.knots, x0, side='right') - 1,
    )
    c0, c1, c2 = _piece_coefficients(w, piece, x0, speed)
    total = np.array([base + jump @ c0, jump @ c1, jump @ c2])

    times, deltas = [], []
    end = x0 + speed * horizon
    for j, knot in enumerate(w.knots[:-1]):
        for moving_right in (True, False):
            if moving_right:
                mask = (speed > 0) & (x0 < knot) & (end > knot)
                old, new = j - 1, j
            else:
                mask = (speed < 0) & (x0 > knot) & (end < knot)
                old, new = j, j - 1
            if not mask.any():
                continue
            xs, ss, js = x0[mask], speed[mask], jump[mask]
            tau = (knot - xs) / ss
            n0, n1, n2 = _piece_coefficients(w, np.full(xs.shape, new), xs, ss)
            o0, o1, o2 = _piece_coefficients(w, np.full(xs.shape, old), xs, ss)
            times.append(tau)
            deltas.append(np.stack([js * (n0 - o0), js * (n1 - o1), js * (n2 - o2)], axis=1))

    if times:
        tau = np.concatenate(times)
        delta = np.concatenate(deltas)
        order = np.argsort(tau, kind='stable')
        tau, delta = tau[order], delta[order]
        coefficients = total + np.vstack([np.zeros(3), np.cumsum(delta, axis=0)])
        bounds = np.concatenate([[0.0], tau, [horizon]])
    else:
        coefficients = total[None, :]
        bounds = np.array([0.0, horizon])

    pieces = []
    for k, (k0, k1, k2) in enumerate(coefficients):
        lo, hi = bounds[k], bounds[k + 1]
        if hi <= lo:
            continue
        # Re-centre on the piece start
        pieces.append(XiPiece(
            start=t + lo,
            end=t + hi,
            c0=k0 + k1 * lo + k2 * lo * lo,
            c1=k1 + 2.0 * k2 * lo,
            c2=k2,
        ))
    return pieces


def _quadratic_roots(a, b, c, length):
    """Real transversal roots of a u^2 + b u + c = 0 in (0, length]."""
    scale = max(abs(a) * length * length, abs(b) * length, abs(c), 1e-300)
    if abs(a) * length * length <= 1e-14 * scale:
        if abs(b) * length <= 1e-14 * scale:
            return []
        roots = [-c / b]
    else:
        disc = b * b - 4.0 * a * c
        if disc <= DISCRIMINANT_TOL * max(b * b, abs(4.0 * a * c)):
            return []
        q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
        roots = [q / a, c / q] if q != 0 else [-b / (2.0 * a)]
    return sorted(u for u in roots if 0.0 < u <= length)


def xi_crossing_times(state, w, thresholds, horizon, t=None):
    """
    Every time in (t, t + horizon] where xi(t) crosses one of ``thresholds``.

    Returns:
        list of Crossing, sorted by time; tangential contacts are skipped
    """
    t = state.now if t is None else t
    eps = CROSSING_EPS * max(1.0, abs(t))
    found = []
    for piece in xi_pieces(state, w, horizon, t):
        length = piece.end - piece.start
        if length <= 0:
            continue
        for index, level in enumerate(thresholds):
            for u in _quadratic_roots(piece.c2, piece.c1, piece.c0 - level, length):
                when = piece.start + u
                if when - t <= eps:
                    continue
                slope = 2.0 * piece.c2 * u + piece.c1
                if slope == 0.0:
                    continue
                found.append(Crossing(when, index, UP if slope > 0 else DOWN))
    found.sort(key=lambda c: (c.time, c.index))
    return found


@dataclass(frozen=True)
class EvacuationResult:
    evacuated: bool
    time: float
    remaining_mass: float

    def as_dict(self):
        return {'evacuated': self.evacuated, 'time': self.time, 'remaining_mass': self.remaining_mass}


def evacuation_time(traj):
    """
    First time after which nothing is left on x < 0.

    A front that crosses x = 0 leaves the region at its crossing time; a
    front still left of the exit at the horizon means the corridor is not
    evacuated, and the mass left there is reported.
    """
    initial = traj.initial_profile
    final = traj.final_profile
    if initial.left_tail != 0:
        return EvacuationResult(False, math.inf, math.inf)
    tol = position_tol(0.0)
    last = 0.0
    pending = False
    for seg in traj.segments:
        if seg.x_end < -tol:
            if seg.t_end >= traj.T:
                pending = True
            last = max(last, seg.t_end)
        elif seg.x_start < -tol and seg.speed > 0:
            last = max(last, seg.t_start - seg.x_start / seg.speed)
    if pending:
        lo = min(final.breakpoints[0], -1.0) if final.breakpoints else -1.0
        return EvacuationResult(False, math.inf, restrict_mass(final, lo, 0.0))
    return EvacuationResult(True, last, 0.0)


class _Milestones:
    """Remarkable instants of an evacuation, filled while the run proceeds."""

    def __init__(self, flux):
        self.flux = flux
        self.t_C = None
        self.t_D = None
        self.first_collision = None
        self.crossings = []
        self.merges = []
        self._born = {}
        self._merged = set()

    def observe(self, outcome):
        if self.t_C is None and outcome.at_exit:
            arrivals = [self.arrival_time(fr, outcome.time) for fr in outcome.arriving if fr.speed > 0]
            if arrivals:
                self.t_C = min(arrivals)
        if self.t_D is None and outcome.created_nonclassical:
            self.t_D = outcome.time
        if outcome.kind == COLLISION and not outcome.at_exit:
            if self.first_collision is None:
                self.first_collision = {'t': outcome.time, 'x': outcome.x}
            if outcome.x < 0:
                self._merge(outcome)

    def arrival_time(self, front, observed):
        """
        When the leading characteristic of a fan front reaches x = 0.

        A fan front moves at the secant speed of its two mesh states; the
        rarefaction it stands for is led by f'(rho_right), which is faster.
        Shocks arrive when observed.
        """
        if front.kind != FAN or front.x0 >= 0:
            return observed
        speed = self.flux.characteristic_speed(front.rho_right)
        if speed <= front.speed:
            return observed
        return min(observed, front.t0 - front.x0 / speed)

    def _merge(self, outcome):
        origins = {self._born.get(fr.id) for fr in outcome.removed}
        for ordinal in sorted(o for o in origins if o is not None):
            if ordinal in self._merged or origins == {ordinal}:
                continue
            self._merged.add(ordinal)
            self.merges.append({'crossing': ordinal, 't': outcome.time, 'x': outcome.x})

    def crossing(self, crossing, q_before, q_after, outcome):
        ordinal = len(self.crossings)
        self.crossings.append({
            't': crossing.time,
            'index': crossing.index,
            'direction': crossing.direction,
            'q_before': q_before,
            'q_after': q_after,
        })
        for fr in outcome.created:
            if fr.speed != 0.0:
                self._born[fr.id] = ordinal
        if self.t_D is None and outcome.created_nonclassical:
            self.t_D = outcome.time

    def first_crossing(self, index, direction):
        for item in self.crossings:
            if item['index'] == index and item['direction'] == direction:
                return item['t']
        return None

    def as_dict(self):
        return {
            't_C': self.t_C,
            't_D': self.t_D,
            'first_collision': self.first_collision,
            'crossings': self.crossings,
            'q_falls': [c['t'] for c in self.crossings if c['q_after'] < c['q_before']],
            'q_recoveries': [c['t'] for c in self.crossings if c['q_after'] > c['q_before']],
            'merges': self.merges,
            'x_M': self.merges[0]['x'] if self.merges else None,
        }


def _level_solver(f_n, level):
    return lambda rho_l, rho_r: constrained_local_riemann(f_n, rho_l, rho_r, level, exact=True)


def _check_inputs(p, policy, n_fan, T):
    if getattr(p, 'kind', None) != 'step':
        raise ValidationError('The exact engine requires a step constraint', code='engine_constraint')
    if policy not in POLICIES:
        raise ValidationError('Unknown solver policy %(policy)s', code='policy', params={'policy': policy})
    if not n_fan >= 1:
        raise ValidationError('n_fan must be at least 1', code='mesh_refinement')
    if not T > 0:
        raise ValidationError('Horizon T must be positive', code='horizon')


def run_exact(rho0, flux, w, p, policy=RQ, n_fan=10, T=1.0, sample_dt=None, profile_times=()):
    """
    Track the solution for a step constraint on [0, T].

    The policy picks the local solution at x = 0 where p is two-valued at
    the start; afterwards the active level changes only at threshold
    crossings of xi, by one value at a time.

    Raises:
        ValidationError: On a non-step constraint or bad parameters
        TrackingError: If the tracker stops making progress
    """
    _check_inputs(p, policy, n_fan, T)
    p.validate_against(flux)
    rho0.validate_range(flux.R)
    f_n = piecewise_linear_flux(flux, n_fan)
    thresholds = list(p.thresholds)
    xi = nonlocal_average(rho0, w)
    index = p.index_minus(xi) if policy == RQ else p.index_plus(xi)
    logger.info(f"Exact run: policy={policy} n_fan={n_fan} T={T} xi(0)={xi!r} level={p.values[index]!r}")

    traj = Trajectory(
        engine='exact',
        config={
            'policy': policy, 'n_fan': n_fan, 'T': T,
            'flux': flux.describe(), 'weight': w.describe(), 'constraint': p.describe(),
            'f_max': flux.f_max, 'rho_bar': flux.rho_bar, 'lip_f': flux.lip, 'w0': w.w_at_zero,
        },
        T=float(T),
        initial_profile=rho0,
    )
    levels = FrozenLevels(p.p_minus(xi), p.p_plus(xi))

    def initial_solver(rho_l, rho_r):
        fan, label = solve_policy(f_n, levels, rho_l, rho_r, policy, exact=True)
        if label in ('CN2', 'CN3', 'NNN4', 'CNN5', 'NNN5'):
            logger.warning(f"Pathological datum {label} at x=0 ({rho_l!r}, {rho_r!r}); policy {policy} applied")
        traj.events.append(EventRecord(time=0.0, type='exit', location=0.0, label='initial', case_label=label,
                                       details={'rho_left': rho_l, 'rho_right': rho_r}))
        return fan

    tracker = FrontTracker(f_n, _level_solver(f_n, p.values[index]), exact=True)
    tracker.load(rho0, 0.0, exit_solver=initial_solver)
    milestones = _Milestones(flux)
    speed_bound = w.w_at_zero * flux.f_max
    sample_dt = sample_dt or T / DEFAULT_SAMPLES
    sample_index = 0

    def record_sample():
        left, right = tracker.traces()
        xi_now = tracker.nonlocal_average(w)
        q = p.values[index]
        traj.xi_trace.record(tracker.now, xi_now, q)
        traj.samples.append(StateSample(
            t=tracker.now,
            mass=tracker.mass(),
            xi=xi_now,
            q=q,
            tv_psi=tracker.tv_psi,
            wave_count=tracker.wave_count,
            trace_left=left,
            trace_right=right,
            flux_left=float(flux(left)),
            flux_right=float(flux(right)),
            nonclassical=tracker.nonclassical_front() is not None,
        ))

    def log_event(outcome):
        milestones.observe(outcome)
        level = p.values[index]
        traj.events.append(EventRecord(
            time=outcome.time,
            type='exit' if outcome.at_exit else 'collision',
            location=outcome.x,
            case_label=classify(flux, FrozenLevels(level, level), outcome.rho_left, outcome.rho_right)
            if outcome.at_exit else '',
            details={'removed': len(outcome.removed), 'created': len(outcome.created),
                     'rho_left': outcome.rho_left, 'rho_right': outcome.rho_right, 'q': level},
            waves_before=tracker.wave_count - len(outcome.created) + len(outcome.removed),
            waves_after=tracker.wave_count,
        ))

    while True:
        next_sample = min(sample_index * sample_dt, T)
        event_time = tracker.peek_time()
        stop = min(event_time, T, next_sample)
        crossing = _next_crossing(tracker, w, thresholds, index, stop, speed_bound)
        if crossing is not None:
            tracker.move_to(crossing.time)
            q_before = p.values[index]
            index += 1 if crossing.direction == UP else -1
            q_after = p.values[index]
            outcome = tracker.resolve_exit(exit_solver=_level_solver(f_n, q_after))
            milestones.crossing(crossing, q_before, q_after, outcome)
            traj.xi_trace.record(crossing.time, thresholds[crossing.index], q_after)
            traj.events.append(EventRecord(
                time=crossing.time,
                type='crossing',
                location=0.0,
                label='fall' if q_after < q_before else 'recovery',
                details={'index': crossing.index, 'direction': crossing.direction,
                         'q_before': q_before, 'q_after': q_after,
                         'removed': len(outcome.removed), 'created': len(outcome.created)},
            ))
            logger.debug(f"xi crosses threshold {crossing.index} {crossing.direction} at t={crossing.time!r}")
            continue
        if event_time <= stop:
            outcome = tracker.step(event_time)
            if outcome is not None:
                log_event(outcome)
            continue
        tracker.move_to(stop)
        if stop >= next_sample:
            record_sample()
            sample_index += 1
        if stop >= T:
            break

    traj.segments = tracker.finalize(T)
    traj.final_profile = tracker.snapshot(T)
    traj.profiles = [(t, traj.profile_at(t)) for t in profile_times]
    traj.milestones.update(milestones.as_dict())
    traj.milestones['t_E'] = milestones.first_crossing(0, UP)
    traj.milestones['t_G'] = milestones.first_crossing(len(thresholds) - 1, DOWN) if thresholds else None
    traj.milestones['events'] = tracker.event_count
    evacuation = evacuation_time(traj)
    traj.milestones['evacuation'] = evacuation.as_dict()
    logger.info(
        f"Exact run finished: {tracker.event_count} events, {len(milestones.crossings)} crossings, "
        f"evacuation {evacuation.time!r}")
    return traj


def _next_crossing(tracker, w, thresholds, index, stop, speed_bound):
    """First crossing of the thresholds bounding the active level before ``stop``, if any."""
    horizon = stop - tracker.now
    if horizon <= 0 or not thresholds:
        return None
    relevant = {}
    if index < len(thresholds):
        relevant[index] = UP
    if index >= 1:
        relevant[index - 1] = DOWN
    xi = tracker.nonlocal_average(w)
    distance = min(abs(xi - thresholds[i]) for i in relevant)
    # |dxi/dt| <= w(0-) f_max, so no crossing can happen before this
    if speed_bound > 0 and distance >= speed_bound * horizon * (1 + 1e-9):
        return None
    for crossing in xi_crossing_times(tracker, w, thresholds, horizon):
        if relevant.get(crossing.index) == crossing.direction:
            return crossing
    return None


__all__ = [
    'Crossing', 'XiPiece', 'xi_pieces', 'xi_crossing_times', 'EvacuationResult', 'evacuation_time',
    'run_exact', 'RQ', 'RP',
]
