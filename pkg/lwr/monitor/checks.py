"""
Post-hoc checks over finished trajectories.

Every check returns a CheckReport listing its violations; none raises on a
failed estimate.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from ..flux import build_flux, piecewise_linear_flux
from ..profile import mass
from ..riemann import FAN, NONCLASSICAL
from .functional import expected_delta, lattice_steps

logger = logging.getLogger('lwr')

DELTA_TOL = 1e-10
RH_TOL = 1e-10
MASS_TOL = 1e-9
JUMP_TOL = 1e-12
# Slack on the xi drift premise for boundaries moved onto an event
DRIFT_SLACK = 1e-9


@dataclass
class CheckReport:
    check: str
    passed: bool = True
    worst_violation: float = 0.0
    context: list = field(default_factory=list)
    checked: int = 0

    def fail(self, amount, **context):
        self.passed = False
        self.worst_violation = max(self.worst_violation, float(amount))
        self.context.append(context)

    def as_dict(self):
        return {
            'check': self.check,
            'pass': self.passed,
            'worst_violation': self.worst_violation,
            'checked': self.checked,
            'context': self.context,
        }


def _lattice(traj):
    config = traj.config
    return lattice_steps(config['f_max'], config['n'], config['h'])


def trajectory_flux(traj):
    """
    The flux fronts of a trajectory were built with, and its fan mesh.

    Splitting runs move fronts with f^n; exact runs with the true flux,
    rarefactions being split on M^{n_fan}.
    """
    flux = build_flux(traj.config['flux'])
    if traj.engine == 'split':
        f_n = piecewise_linear_flux(flux, traj.config['n'])
        return f_n, f_n.mesh
    return flux, piecewise_linear_flux(flux, traj.config['n_fan']).mesh


def check_temple_monotone(traj):
    """
    Upsilon never increases, drops by at least 2^-n f_max whenever the wave
    count grows, and every labelled change matches its prescribed value.
    """
    report = CheckReport('temple_monotone')
    f_max, n, h = traj.config['f_max'], traj.config['n'], traj.config['h']
    delta_n, _ = _lattice(traj)
    # Tabulated fluxes are linear between samples, so fan fronts may span
    # several lattice levels and only the sign of each change is prescribed
    exact_ledger = traj.config['flux'].get('kind') == 'lwr'
    for before, after in zip(traj.temple, traj.temple[1:]):
        report.checked += 1
        rise = after.upsilon - before.upsilon
        if rise > DELTA_TOL:
            report.fail(rise, t=after.t, reason='upsilon_increase', delta=rise)
    for event in traj.events:
        delta = event.delta_upsilon
        if delta is None:
            continue
        report.checked += 1
        if event.waves_after > event.waves_before and delta > -delta_n + DELTA_TOL:
            report.fail(delta + delta_n, t=event.time, label=event.label, reason='wave_creation', delta=delta)
        expected = expected_delta(event.label, f_max, n, h) if exact_ledger else None
        if expected is not None and abs(delta - expected) > DELTA_TOL:
            report.fail(abs(delta - expected), t=event.time, label=event.label, reason='label_mismatch',
                        delta=delta, expected=expected)
        elif expected is None and delta > DELTA_TOL:
            report.fail(delta, t=event.time, label=event.label, reason='upsilon_increase', delta=delta)
    return report


def tv_bound(traj, t):
    """TV(Psi(rho_0)) + 4 f_max + 10 w(0-) Lip(p) f_max t."""
    config = traj.config
    tv0 = traj.samples[0].tv_psi if traj.samples else 0.0
    f_max = config['f_max']
    return tv0 + 4.0 * f_max + 10.0 * config['w0'] * config.get('lip_p', 0.0) * f_max * t


def check_tv_bound(traj):
    report = CheckReport('tv_bound')
    rows = [(s.t, s.tv_psi) for s in traj.samples] + [(r.t, r.tv_psi) for r in traj.temple]
    for t, tv in rows:
        report.checked += 1
        excess = tv - tv_bound(traj, t)
        if excess > DELTA_TOL:
            report.fail(excess, t=t, tv_psi=tv, bound=tv_bound(traj, t))
    return report


def check_efficiency_jumps(traj):
    """
    Consecutive efficiencies differ by 0 or one lattice step 2^-h f_max, and
    xi drifts by at most dt_h f_max w(0-) between updates, dt_h being the
    nominal step whatever step the run used.
    """
    report = CheckReport('efficiency_jumps')
    config = traj.config
    _, delta_h = _lattice(traj)
    drift_bound = config['dt_nominal'] * config['f_max'] * config['w0']
    for prev, step in zip(traj.steps, traj.steps[1:]):
        report.checked += 1
        jump = abs(step.q - prev.q)
        if jump > JUMP_TOL * config['f_max'] and abs(jump - delta_h) > JUMP_TOL * config['f_max']:
            report.fail(jump, t=step.t, reason='efficiency_jump', q_before=prev.q, q_after=step.q)
        drift = abs(step.xi - prev.xi)
        if drift > drift_bound + DRIFT_SLACK:
            report.fail(drift - drift_bound, t=step.t, reason='xi_drift', drift=drift, bound=drift_bound)
    return report


def check_q_functional(traj):
    """Q = Upsilon - Gamma may rise only across a step boundary, by at most 5 * 2^-h f_max."""
    report = CheckReport('q_functional')
    _, delta_h = _lattice(traj)
    for before, after in zip(traj.temple, traj.temple[1:]):
        report.checked += 1
        rise = after.q_functional - before.q_functional
        if rise <= DELTA_TOL:
            continue
        if after.step_index == before.step_index:
            report.fail(rise, t=after.t, reason='rise_inside_step', delta=rise)
        elif rise > 5.0 * delta_h + DELTA_TOL:
            report.fail(rise - 5.0 * delta_h, t=after.t, reason='rise_too_large', delta=rise)
    return report


def check_mass(traj):
    report = CheckReport('mass')
    masses = [(s.t, s.mass) for s in traj.samples if s.mass is not None]
    if not masses:
        return report
    m0 = masses[0][1]
    for t, m in masses:
        report.checked += 1
        drift = abs(m - m0)
        if drift > MASS_TOL:
            report.fail(drift, t=t, mass=m, initial=m0)
    return report


def check_traces(traj):
    """The flux is continuous across x = 0 and a nonclassical front carries the active level."""
    report = CheckReport('traces')
    tol = 1e-9 * traj.config['f_max']
    for sample in traj.samples:
        report.checked += 1
        gap = abs(sample.flux_left - sample.flux_right)
        if gap > tol:
            report.fail(gap, t=sample.t, reason='flux_gap', flux_left=sample.flux_left,
                        flux_right=sample.flux_right)
        if sample.nonclassical and abs(sample.flux_left - sample.q) > tol:
            report.fail(abs(sample.flux_left - sample.q), t=sample.t, reason='nonclassical_level',
                        flux=sample.flux_left, q=sample.q)
        elif sample.flux_left > sample.q + tol:
            report.fail(sample.flux_left - sample.q, t=sample.t, reason='exit_capacity',
                        flux=sample.flux_left, q=sample.q)
    return report


def front_problems(flux, mesh, segment, tol=RH_TOL):
    """
    Entropy problems of one front segment, as (reason, amount) pairs.

    Increasing jumps must keep f above their chord; decreasing jumps are
    admitted only as fan fronts spanning a single mesh cell, or several
    cells on which f is linear. Nonclassical
    fronts must sit still at x = 0 and straddle rho_bar at equal flux.
    """
    problems = []
    rho_l, rho_r = segment.rho_left, segment.rho_right
    f_l, f_r = float(flux(rho_l)), float(flux(rho_r))
    residual = abs(segment.speed * (rho_l - rho_r) - (f_l - f_r))
    if residual > tol * max(1.0, flux.f_max):
        problems.append(('rankine_hugoniot', residual))
    if segment.kind == NONCLASSICAL:
        away = max(abs(segment.x_start), abs(segment.x_end))
        if away > 0.0:
            problems.append(('nonclassical_away_from_exit', away))
        if not rho_l > flux.rho_bar > rho_r:
            problems.append(('nonclassical_states', abs(rho_l - rho_r)))
        if segment.level is not None and abs(f_l - segment.level) > tol * max(1.0, flux.f_max):
            problems.append(('nonclassical_level', abs(f_l - segment.level)))
        return problems
    if rho_l < rho_r:
        inside = np.concatenate([mesh.interior_nodes(rho_l, rho_r), [0.5 * (rho_l + rho_r)]])
        chord = f_l + segment.speed * (inside - rho_l)
        gap = float(np.max(chord - flux(inside)))
        if gap > tol * max(1.0, flux.f_max):
            problems.append(('lax', gap))
    elif rho_l > rho_r:
        if segment.kind != FAN:
            problems.append(('lax', rho_l - rho_r))
            return problems
        inside = mesh.interior_nodes(rho_r, rho_l)
        if len(inside):
            # A fan front wider than one cell is a contact: f must be linear across it
            gap = float(np.max(np.abs(f_l + segment.speed * (inside - rho_l) - flux(inside))))
            if gap > tol * max(1.0, flux.f_max):
                problems.append(('fan_width', gap))
    return problems


def validate_entropy(traj):
    """Rankine-Hugoniot and admissibility of every logged front, plus the exit trace."""
    report = CheckReport('entropy')
    flux, mesh = trajectory_flux(traj)
    for segment in traj.segments:
        report.checked += 1
        for reason, amount in front_problems(flux, mesh, segment):
            report.fail(amount, t=segment.t_start, x=segment.x_start, front=segment.front_id, reason=reason)
    traces = check_traces(traj)
    report.checked += traces.checked
    for context in traces.context:
        report.fail(0.0, **context)
    report.worst_violation = max(report.worst_violation, traces.worst_violation)
    return report


def run_checks(traj):
    """All checks that apply to the trajectory's engine."""
    reports = [check_mass(traj), check_traces(traj), validate_entropy(traj)]
    if traj.engine == 'split':
        reports = [
            check_temple_monotone(traj),
            check_tv_bound(traj),
            check_efficiency_jumps(traj),
            check_q_functional(traj),
        ] + reports
    for report in reports:
        if report.passed:
            logger.debug(f"Check {report.check} passed ({report.checked} items)")
        else:
            logger.warning(
                f"Check {report.check} failed: {len(report.context)} violations, worst {report.worst_violation!r}")
    return reports


def check_profile_mass(traj, times):
    """Mass of the profiles rebuilt from the front segments, against the initial mass."""
    report = CheckReport('profile_mass')
    initial = traj.initial_profile
    if initial.left_tail != 0 or initial.right_tail != 0:
        return report
    m0 = mass(initial)
    for t in times:
        report.checked += 1
        profile = traj.profile_at(t)
        if profile.left_tail != 0 or profile.right_tail != 0:
            report.fail(max(abs(profile.left_tail), abs(profile.right_tail)), t=t, reason='nonzero_tails')
            continue
        drift = abs(mass(profile) - m0)
        if drift > MASS_TOL:
            report.fail(drift, t=t, mass=mass(profile), initial=m0)
    return report
