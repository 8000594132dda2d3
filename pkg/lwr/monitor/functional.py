"""
The Temple functional and the interaction ledger.

Upsilon = TV(Psi(rho)) + gamma + Gamma, where gamma is 0 while a
nonclassical front carries the active efficiency q and 4 (f_max - q)
otherwise, and Gamma = 5 * 2^-h f_max * (T / dt - l) on the l-th step.
"""
from dataclasses import dataclass

from ..riemann import FAN

INTERACTION_LABELS = (
    'I0', 'I1a', 'I1b', 'I1c', 'I2a', 'I2b', 'I2c', 'I3a', 'I3b', 'I3c', 'I4a', 'I4b', 'I4c',
    'U1a', 'U1b', 'U2a', 'U2b', 'U2c', 'U-noop',
)

# Delta Upsilon per label as (multiple, lattice): multiple * 2^-n f_max or * 2^-h f_max
_EXPECTED = {
    'I1a': (0, 'n'), 'I2a': (0, 'n'),
    'I1b': (-2, 'n'), 'I1c': (-2, 'n'), 'I2b': (-2, 'n'), 'I2c': (-2, 'n'),
    'I3a': (0, 'n'), 'I3b': (0, 'n'), 'I3c': (0, 'n'),
    'I4a': (0, 'n'), 'I4b': (0, 'n'), 'I4c': (0, 'n'),
    'U1a': (-9, 'h'), 'U1b': (-5, 'h'),
    'U2a': (-1, 'h'), 'U2b': (-1, 'h'), 'U2c': (-1, 'h'),
    'U-noop': (-5, 'h'),
}


@dataclass(frozen=True)
class TempleRecord:
    t: float
    tv_psi: float
    gamma: float
    Gamma: float
    upsilon: float
    wave_count: int
    step_index: int = 0

    @property
    def q_functional(self):
        """Q = Upsilon - Gamma."""
        return self.tv_psi + self.gamma

    def as_dict(self):
        return {
            't': self.t, 'tv_psi': self.tv_psi, 'gamma': self.gamma, 'Gamma': self.Gamma,
            'upsilon': self.upsilon, 'wave_count': self.wave_count, 'step_index': self.step_index,
        }


def lattice_steps(f_max, n, h):
    """(2^-n f_max, 2^-h f_max)."""
    return f_max / (1 << n), f_max / (1 << h)


def temple(state, cfg):
    """Temple functional of a splitting state at its current time."""
    tracker = state.tracker
    f_n = tracker.f_n
    q = state.q
    delta_h = f_n.f_max / (1 << cfg.h)
    rho_minus, rho_plus = tracker.traces()
    active = (
        rho_minus > f_n.rho_bar > rho_plus
        and abs(float(f_n(rho_minus)) - q) <= f_n.tol
        and abs(float(f_n(rho_plus)) - q) <= f_n.tol
    )
    gamma = 0.0 if active else 4.0 * (f_n.f_max - q)
    Gamma = 5.0 * delta_h * (cfg.T / cfg.dt - state.step_index)
    tv = tracker.tv_psi
    return TempleRecord(
        t=state.t,
        tv_psi=tv,
        gamma=gamma,
        Gamma=Gamma,
        upsilon=tv + gamma + Gamma,
        wave_count=tracker.wave_count,
        step_index=state.step_index,
    )


def classify_interaction(outcome):
    """
    Label of an event inside a fractional step.

    Away from x = 0, or when several fronts reach x = 0 together, the event
    is a plain merge (I0). A single front reaching x = 0 is a rarefaction
    (I1 from the left, I2 from the right) or a shock (I3, I4); the suffix
    depends on what was parked at x = 0 before it arrived.
    """
    if not outcome.at_exit:
        return 'I0'
    arriving = outcome.arriving
    if len(arriving) != 1:
        return 'I0'
    front = arriving[0]
    from_left = front.speed > 0
    parked = outcome.stationary_before
    if front.kind == FAN:
        base = 'I1' if from_left else 'I2'
        if parked:
            return base + 'c'
        return base + ('b' if outcome.created_nonclassical else 'a')
    base = 'I3' if from_left else 'I4'
    if not parked:
        return base + 'a'
    still = parked[0]
    return base + ('b' if still.rho_left < still.rho_right else 'c')


def classify_update(q_before, q_after, nonclassical_before, outcome=None, tol=0.0):
    """Label of a step boundary from the efficiency change and the state at x = 0."""
    if abs(q_after - q_before) <= tol:
        return 'U-noop'
    if q_after > q_before:
        return 'U1b' if nonclassical_before else 'U1a'
    if nonclassical_before:
        return 'U2c'
    if outcome is not None and outcome.created_nonclassical:
        return 'U2b'
    return 'U2a'


def expected_delta(label, f_max, n, h):
    """
    Delta Upsilon prescribed for a label, or None when only its sign is known (I0).
    """
    if label not in _EXPECTED:
        return None
    multiple, lattice = _EXPECTED[label]
    delta_n, delta_h = lattice_steps(f_max, n, h)
    return multiple * (delta_n if lattice == 'n' else delta_h)
