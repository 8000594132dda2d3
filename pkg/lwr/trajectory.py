"""
Containers for everything an engine run produces.
"""
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

from .profile import DensityProfile, XiTrace

# fronts meeting at an event end within this distance of it
POSITION_TOL = 1e-9


@dataclass(frozen=True)
class FrontSegment:
    """One straight piece of a front's path in the (x, t) plane."""
    front_id: int
    t_start: float
    x_start: float
    t_end: float
    x_end: float
    rho_left: float
    rho_right: float
    kind: str
    level: Optional[float]
    speed: float

    def position(self, t):
        return self.x_start + self.speed * (t - self.t_start)


@dataclass
class EventRecord:
    time: float
    type: str  # 'collision', 'exit', 'crossing' or 'step'
    location: float
    label: str = ''
    case_label: str = ''
    shift: float = 0.0
    details: dict = field(default_factory=dict)
    upsilon_before: Optional[float] = None
    upsilon_after: Optional[float] = None
    waves_before: int = 0
    waves_after: int = 0

    @property
    def delta_upsilon(self):
        if self.upsilon_before is None or self.upsilon_after is None:
            return None
        return self.upsilon_after - self.upsilon_before

    def as_dict(self):
        data = asdict(self)
        data['delta_upsilon'] = self.delta_upsilon
        return data


@dataclass(frozen=True)
class StateSample:
    t: float
    mass: Optional[float]
    xi: float
    q: float
    tv_psi: float
    wave_count: int
    trace_left: float
    trace_right: float
    flux_left: float
    flux_right: float
    nonclassical: bool


@dataclass(frozen=True)
class StepRecord:
    """Constraint update at the start of a fractional step."""
    index: int
    t: float
    xi: float
    level_index: int
    q: float


@dataclass
class Trajectory:
    engine: str
    config: dict
    T: float
    segments: list = field(default_factory=list)
    events: list = field(default_factory=list)
    samples: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    xi_trace: XiTrace = field(default_factory=XiTrace)
    profiles: list = field(default_factory=list)  # (t, DensityProfile)
    temple: list = field(default_factory=list)
    initial_profile: DensityProfile = field(default_factory=DensityProfile)
    final_profile: DensityProfile = field(default_factory=DensityProfile)
    milestones: dict = field(default_factory=dict)

    def events_of(self, kind):
        return [event for event in self.events if event.type == kind]

    def profile_at(self, t):
        """Density profile at time t rebuilt from the front segments."""
        if t >= self.T:
            live = self._fronts_at_horizon()
        else:
            live = [seg for seg in self.segments if seg.t_start <= t < seg.t_end]
        live.sort(key=lambda seg: (seg.position(t), seg.speed))
        if not live:
            return DensityProfile.constant(self.initial_profile.left_tail)
        xs = [seg.position(t) for seg in live]
        values = [live[0].rho_left] + [seg.rho_right for seg in live]
        return DensityProfile.build(xs, values)

    def _fronts_at_horizon(self):
        """Segments alive at T; fronts born at T replace the ones that met where they start."""
        ending = [seg for seg in self.segments if seg.t_end == self.T]
        born = [seg.x_start for seg in ending if seg.t_start == self.T]
        return [
            seg for seg in ending
            if seg.t_start == self.T or not any(math.isclose(seg.x_end, x, abs_tol=POSITION_TOL) for x in born)
        ]
