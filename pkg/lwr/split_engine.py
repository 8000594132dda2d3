"""
Operator splitting: the efficiency q is frozen on each step of length dt and
the solution is tracked exactly under the piecewise-linear flux f^n; at
every step boundary q is updated from the non-local average of the current
profile through the lattice approximation p^h.
"""
import logging
import math
from dataclasses import dataclass

from django.conf import settings
from django.core.exceptions import ValidationError

from .constraints import FrozenLevels, approximate_constraint
from .flux import piecewise_linear_flux
from .monitor.functional import classify_interaction, classify_update, temple
from .profile import nonlocal_average, quantize_to_mesh
from .riemann import classify, constrained_local_riemann
from .tracking import FrontTracker
from .trajectory import EventRecord, StateSample, StepRecord, Trajectory

logger = logging.getLogger('lwr')

# Events this close after a step boundary move the boundary onto themselves
H2_SHIFT_TOL = 1e-9


@dataclass(frozen=True)
class SplitConfig:
    """
    Parameters of a splitting run.

    ``dt`` is the step actually used; ``dt_nominal`` the CFL step
    1 / (2^(h+1) w(0-) Lip(p)). They differ only when ``dt_scale`` != 1.
    """
    n: int
    h: int
    T: float
    dt: float
    dt_nominal: float

    @property
    def steps(self):
        return max(1, math.ceil(self.T / self.dt - 1e-12))

    def boundary(self, index):
        return min(index * self.dt, self.T)

    def describe(self):
        return {'n': self.n, 'h': self.h, 'T': self.T, 'dt': self.dt, 'dt_nominal': self.dt_nominal}


def compute_dt(h, w, lip_p):
    """
    The CFL-like step dt_h = 1 / (2^(h+1) w(0-) Lip(p)).

    Raises:
        ValidationError: If p is constant (no splitting is needed) or w(0-) is not positive
    """
    if not lip_p > 0:
        raise ValidationError(
            'The constraint is constant (Lip(p) = 0): splitting is unnecessary, '
            'run a single frozen evolution or use a step constraint with the exact engine',
            code='constant_constraint',
        )
    w0 = w.w_at_zero
    if not w0 > 0:
        raise ValidationError('The weight must satisfy w(0-) > 0', code='weight_support')
    return 1.0 / ((1 << (h + 1)) * w0 * lip_p)


def build_split_config(n, h, T, w, p, dt_scale=1.0):
    """
    Validate the refinements and derive the time step.

    Raises:
        ValidationError: If h >= n, T <= 0 or the step count exceeds the configured cap
    """
    if not (0 <= h < n):
        raise ValidationError(
            'Refinements must satisfy 0 <= h < n (got h=%(h)s, n=%(n)s)',
            code='refinement_order',
            params={'h': h, 'n': n},
        )
    if not T > 0:
        raise ValidationError('Horizon T must be positive', code='horizon')
    if not dt_scale > 0:
        raise ValidationError('dt_scale must be positive', code='dt_scale')
    dt_nominal = compute_dt(h, w, p.lip)
    cfg = SplitConfig(n=int(n), h=int(h), T=float(T), dt=dt_nominal * dt_scale, dt_nominal=dt_nominal)
    if cfg.steps > settings.NLOC_LWR_MAX_STEPS:
        raise ValidationError(
            'Run needs %(steps)s steps, above the cap of %(cap)s; lower h or T',
            code='step_cap',
            params={'steps': cfg.steps, 'cap': settings.NLOC_LWR_MAX_STEPS},
        )
    return cfg


class WaveFrontState:
    """
    Tracker plus the frozen efficiency of the current step.

    ``q_index`` is the efficiency in units of 2^-n f_max, so changes of q
    compare exactly.
    """

    def __init__(self, tracker, q_index, step_index=0):
        self.tracker = tracker
        self.q_index = q_index
        self.step_index = step_index

    @property
    def t(self):
        return self.tracker.now

    @property
    def q(self):
        return self.q_index * self.tracker.f_n.mesh.step

    def exit_solver(self, q=None):
        f_n = self.tracker.f_n
        q = self.q if q is None else q
        return lambda rho_l, rho_r: constrained_local_riemann(f_n, rho_l, rho_r, q)

    def nonclassical_active(self):
        return self.tracker.nonclassical_front() is not None


def set_efficiency(state, q_index):
    """Freeze a new efficiency and re-solve at x = 0; returns the tracker outcome."""
    state.q_index = q_index
    return state.tracker.resolve_exit(exit_solver=state.exit_solver())


def advance_frozen(state, q, duration, on_event=None, h2_window=H2_SHIFT_TOL):
    """
    Track the solution for ``duration`` with the exit efficiency frozen at q.

    q must be a lattice value of f(M^n). Returns the state, whose clock may
    sit slightly past the nominal end when an event was pulled onto the
    boundary.
    """
    mesh = state.tracker.f_n.mesh
    q_index = round(q / mesh.step)
    if abs(q_index * mesh.step - q) > state.tracker.f_n.tol:
        raise ValidationError('Efficiency %(q)s is not a lattice value of f(M^n)', code='mesh_closure',
                              params={'q': q})
    if q_index != state.q_index:
        outcome = set_efficiency(state, q_index)
        if on_event is not None and not outcome.noop:
            on_event(outcome)
    state.tracker.advance_to(state.t + duration, on_event, h2_window)
    return state


class _Recorder:
    """Collects events, Temple records and samples while a run proceeds."""

    def __init__(self, state, cfg, traj):
        self.state = state
        self.cfg = cfg
        self.traj = traj
        self.current = temple(state, cfg)
        traj.temple.append(self.current)

    def on_event(self, outcome):
        state = self.state
        before = self.current
        after = temple(state, self.cfg)
        f_n = state.tracker.f_n
        label = classify_interaction(outcome)
        case_label = ''
        if outcome.at_exit:
            case_label = classify(f_n, FrozenLevels(state.q, state.q), outcome.rho_left, outcome.rho_right)
        self.traj.events.append(EventRecord(
            time=outcome.time,
            type='exit' if outcome.at_exit else 'collision',
            location=outcome.x,
            label=label,
            case_label=case_label,
            shift=outcome.shift,
            details={
                'removed': len(outcome.removed),
                'created': len(outcome.created),
                'rho_left': outcome.rho_left,
                'rho_right': outcome.rho_right,
                'q': state.q,
            },
            upsilon_before=before.upsilon,
            upsilon_after=after.upsilon,
            waves_before=before.wave_count,
            waves_after=after.wave_count,
        ))
        if outcome.shift:
            self.traj.milestones.setdefault('h2_shifts', []).append({'t': outcome.time, 'shift': outcome.shift})
        self.traj.temple.append(after)
        self.current = after

    def on_boundary(self, q_before, nonclassical_before, outcome, xi):
        state = self.state
        before = self.current
        after = temple(state, self.cfg)
        label = classify_update(q_before, state.q, nonclassical_before, outcome, tol=state.tracker.f_n.tol)
        self.traj.events.append(EventRecord(
            time=state.t,
            type='step',
            location=0.0,
            label=label,
            details={'q_before': q_before, 'q_after': state.q, 'xi': xi, 'step': state.step_index},
            upsilon_before=before.upsilon,
            upsilon_after=after.upsilon,
            waves_before=before.wave_count,
            waves_after=after.wave_count,
        ))
        self.traj.temple.append(after)
        self.current = after

    def sample(self, xi):
        tracker = self.state.tracker
        f_n = tracker.f_n
        left, right = tracker.traces()
        self.traj.samples.append(StateSample(
            t=tracker.now,
            mass=tracker.mass(),
            xi=xi,
            q=self.state.q,
            tv_psi=tracker.tv_psi,
            wave_count=tracker.wave_count,
            trace_left=left,
            trace_right=right,
            flux_left=float(f_n(left)),
            flux_right=float(f_n(right)),
            nonclassical=self.state.nonclassical_active(),
        ))


def run_splitting(rho0, flux, w, p, cfg, profile_times=()):
    """
    Approximate solution on [0, T] by operator splitting and front tracking.

    The initial datum is quantized to M^n first. Returns a Trajectory whose
    events carry interaction labels and Temple values before and after.
    """
    f_n = piecewise_linear_flux(flux, cfg.n)
    mesh = f_n.mesh
    p_h = approximate_constraint(p, flux.f_max, cfg.h)
    rho = quantize_to_mesh(rho0, mesh, flux.rho_bar)
    rho.validate_range(flux.R)
    logger.info(f"Splitting run: n={cfg.n} h={cfg.h} dt={cfg.dt!r} steps={cfg.steps} T={cfg.T}")

    xi = nonlocal_average(rho, w)
    level = p_h.level_index(xi)
    tracker = FrontTracker(f_n, exit_solver=None, exact=False)
    state = WaveFrontState(tracker, p_h.mesh_index(xi, cfg.n))
    tracker.exit_solver = state.exit_solver()
    tracker.load(rho, 0.0)

    traj = Trajectory(
        engine='split',
        config={
            **cfg.describe(),
            'flux': flux.describe(), 'weight': w.describe(), 'constraint': p.describe(),
            'f_max': flux.f_max, 'rho_bar': flux.rho_bar, 'lip_f': flux.lip, 'w0': w.w_at_zero, 'lip_p': p.lip,
        },
        T=cfg.T,
        initial_profile=rho,
    )
    traj.milestones['snap_deviation'] = p_h.snap_deviation
    traj.milestones['p_h'] = p_h.as_step_constraint().describe()
    traj.steps.append(StepRecord(index=0, t=0.0, xi=xi, level_index=level, q=state.q))
    traj.xi_trace.record(0.0, xi, state.q)
    recorder = _Recorder(state, cfg, traj)
    recorder.sample(xi)

    for index in range(1, cfg.steps + 1):
        t_end = cfg.boundary(index)
        last = index == cfg.steps
        # t_end - t is exact for consecutive boundaries, so the step lands on t_end
        advance_frozen(state, state.q, t_end - state.t, recorder.on_event, 0.0 if last else H2_SHIFT_TOL)
        xi = tracker.nonlocal_average(w)
        if last:
            recorder.sample(xi)
            break
        q_before = state.q
        nonclassical_before = state.nonclassical_active()
        state.step_index = index
        new_index = p_h.mesh_index(xi, cfg.n)
        outcome = set_efficiency(state, new_index) if new_index != state.q_index else None
        recorder.on_boundary(q_before, nonclassical_before, outcome, xi)
        level = p_h.level_index(xi)
        traj.steps.append(StepRecord(index=index, t=tracker.now, xi=xi, level_index=level, q=state.q))
        traj.xi_trace.record(tracker.now, xi, state.q)
        recorder.sample(xi)

    traj.segments = tracker.finalize(cfg.T)
    traj.final_profile = tracker.snapshot(cfg.T)
    traj.profiles = [(t, traj.profile_at(t)) for t in profile_times]
    traj.milestones['events'] = tracker.event_count
    logger.info(
        f"Splitting run finished: {tracker.event_count} events, {len(traj.steps)} steps, "
        f"{len(traj.segments)} front segments")
    return traj
