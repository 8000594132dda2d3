"""
Front tracking shared by the splitting and exact engines.

The tracker owns the ordered list of live fronts and a heap of candidate
events (pair collisions and fronts reaching x = 0). Every event replaces the
group of fronts meeting at one point by the solution of the Riemann problem
between the outer states of the group; at x = 0 the engine's exit solver is
used instead of the classical one.
"""
import bisect
import heapq
import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
from django.conf import settings

from .exceptions import TrackingError
from .flux import PsiMap
from .profile import DensityProfile
from .riemann import NONCLASSICAL, classical_riemann
from .trajectory import FrontSegment

__all__ = ['TrackedFront', 'ScheduledEvent', 'EventQueue', 'TrackerOutcome', 'FrontTracker', 'TrackingError']

logger = logging.getLogger('lwr')

COLLISION = 'collision'
EXIT = 'exit'
RESOLVE = 'resolve'

# Exit hits sort before pair collisions at the same time and place
_PRIORITY = {EXIT: 0, COLLISION: 1}

POS_TOL = 1e-10
TIME_TOL = 1e-12
SIMULTANEOUS_TOL = 1e-12


def position_tol(x):
    return POS_TOL * max(1.0, abs(x))


@dataclass
class TrackedFront:
    id: int
    x0: float
    t0: float
    speed: float
    rho_left: float
    rho_right: float
    kind: str
    level: Optional[float] = None
    alive: bool = True

    def position(self, t):
        return self.x0 + self.speed * (t - self.t0)


@dataclass(order=True)
class ScheduledEvent:
    time: float
    priority: int
    x: float
    seq: int
    kind: str = field(compare=False)
    ids: tuple = field(compare=False)


class EventQueue:
    """Priority queue of candidate events, ordered by (time, priority, x)."""

    def __init__(self):
        self._queue: List[ScheduledEvent] = []

    def schedule(self, event: ScheduledEvent) -> None:
        heapq.heappush(self._queue, event)

    def pop(self) -> Optional[ScheduledEvent]:
        if self._queue:
            return heapq.heappop(self._queue)
        return None

    def peek(self) -> Optional[ScheduledEvent]:
        if self._queue:
            return self._queue[0]
        return None

    def is_empty(self) -> bool:
        return len(self._queue) == 0

    def __len__(self) -> int:
        return len(self._queue)

    def clear(self) -> None:
        self._queue.clear()


@dataclass(frozen=True)
class TrackerOutcome:
    """What one processed event did to the front list."""
    time: float
    x: float
    kind: str
    removed: tuple
    created: tuple
    rho_left: float
    rho_right: float
    shift: float = 0.0
    unchanged: bool = False

    @property
    def at_exit(self):
        return self.x == 0.0

    @property
    def noop(self):
        return self.unchanged

    @property
    def arriving(self):
        """Fronts of the group that were moving into the event point."""
        return tuple(fr for fr in self.removed if fr.speed != 0.0)

    @property
    def stationary_before(self):
        return tuple(fr for fr in self.removed if fr.speed == 0.0)

    @property
    def created_nonclassical(self):
        return any(fr.kind == NONCLASSICAL for fr in self.created)


class FrontTracker:
    """
    Exact tracking of a piecewise-constant solution under a frozen exit rule.

    ``exit_solver(rho_l, rho_r)`` returns the fan used at x = 0 and may be
    swapped by the engine between events (a new efficiency, a new level).
    In mesh mode (``exact=False``) TV(Psi) is kept in lattice units.
    """

    def __init__(self, f_n, exit_solver, exact=False, max_events=None):
        self.f_n = f_n
        self.exit_solver = exit_solver
        self.exact = exact
        self.max_events = max_events or settings.NLOC_LWR_MAX_EVENTS
        self.fronts: List[TrackedFront] = []
        self.queue = EventQueue()
        self.segments: List[FrontSegment] = []
        self.now = 0.0
        self.event_count = 0
        self.left_tail = 0.0
        self.right_tail = 0.0
        self._next_id = 0
        self._seq = 0
        self._tv = 0
        self._alive = {}
        if exact:
            self._psi = PsiMap(f_n.flux)
            self.tv_unit = 1.0
        else:
            mesh = f_n.mesh
            self._psi = lambda rho: mesh.psi_index(mesh.node_index(rho))
            self.tv_unit = mesh.step

    # -- setup ---------------------------------------------------------

    def load(self, profile, t=0.0, exit_solver=None):
        """Start tracking ``profile`` at time t, solving every jump as a Riemann problem."""
        self.fronts = []
        self.queue.clear()
        self._alive = {}
        self.now = float(t)
        self.left_tail = profile.left_tail
        self.right_tail = profile.right_tail
        self._tv = 0
        solver = exit_solver or self.exit_solver
        for x, rho_l, rho_r in profile.jumps():
            x = 0.0 if abs(x) <= position_tol(x) else x
            fan = solver(rho_l, rho_r) if x == 0.0 else classical_riemann(self.f_n, rho_l, rho_r, self.exact)
            created = [self._new_front(x, front, fan.level) for front in fan.fronts]
            self.fronts.extend(created)
            self._tv += self._tv_of(created)
        self._check_chain(0, len(self.fronts))
        for i in range(len(self.fronts) - 1):
            self._schedule_pair(i)
        for front in self.fronts:
            self._schedule_exit(front)
        logger.debug(f"Tracker loaded {len(self.fronts)} fronts at t={self.now}")

    def _new_front(self, x, front, level=None):
        tracked = TrackedFront(
            id=self._next_id,
            x0=x,
            t0=self.now,
            speed=front.speed,
            rho_left=front.rho_left,
            rho_right=front.rho_right,
            kind=front.kind,
            level=level if front.kind == NONCLASSICAL else None,
        )
        self._next_id += 1
        self._alive[tracked.id] = tracked
        return tracked

    # -- queries -------------------------------------------------------

    @property
    def wave_count(self):
        return len(self.fronts)

    @property
    def tv_psi(self):
        return self._tv * self.tv_unit

    @property
    def tv_units(self):
        return self._tv

    def _key(self, t):
        return lambda front: front.position(t)

    def locate(self, t, lo, hi):
        """Index range [a, b) of fronts whose position at t lies in [lo, hi]."""
        key = self._key(t)
        a = bisect.bisect_left(self.fronts, lo, key=key)
        b = bisect.bisect_right(self.fronts, hi, key=key)
        return a, b

    def state_left_of(self, i):
        """State immediately left of front i (or the right tail when i is past the end)."""
        if i < len(self.fronts):
            return self.fronts[i].rho_left
        return self.right_tail

    def group_at(self, t, x):
        tol = position_tol(x)
        return self.locate(t, x - tol, x + tol)

    def traces(self, t=None):
        """
        (rho(t, 0-), rho(t, 0+)) just after t.

        Fronts sitting at x = 0 at time t count on the side they move to.
        """
        t = self.now if t is None else t
        a, b = self.group_at(t, 0.0)
        left = self.state_left_of(a)
        for front in self.fronts[a:b]:
            if front.speed < 0:
                left = front.rho_right
        right = left
        for front in self.fronts[a:b]:
            if front.speed <= 0:
                right = front.rho_right
        return left, right

    def trace_left(self, t=None):
        return self.traces(t)[0]

    def trace_right(self, t=None):
        return self.traces(t)[1]

    def nonclassical_front(self, t=None):
        t = self.now if t is None else t
        a, b = self.group_at(t, 0.0)
        for front in self.fronts[a:b]:
            if front.kind == NONCLASSICAL:
                return front
        return None

    def positions(self, t=None):
        t = self.now if t is None else t
        xs = np.array([front.position(t) for front in self.fronts], dtype=float)
        return np.maximum.accumulate(xs) if xs.size else xs

    def snapshot(self, t=None):
        t = self.now if t is None else t
        if not self.fronts:
            return DensityProfile.constant(self.left_tail)
        values = [self.fronts[0].rho_left] + [front.rho_right for front in self.fronts]
        return DensityProfile.build(self.positions(t), values)

    def mass(self, t=None):
        """Integral of the density, or None when a tail is non-zero."""
        if self.left_tail != 0 or self.right_tail != 0:
            return None
        t = self.now if t is None else t
        return float(sum(front.position(t) * (front.rho_left - front.rho_right) for front in self.fronts))

    def nonlocal_average(self, w, t=None):
        """xi at time t; only fronts inside (-i_w, 0) see a fractional weight."""
        t = self.now if t is None else t
        a, b = self.locate(t, -w.i_w, -position_tol(0.0))
        # Fronts at or right of x=0 carry full weight: they telescope into one state
        xi = self.state_left_of(b)
        if b > a:
            jumps = np.array([fr.rho_left - fr.rho_right for fr in self.fronts[a:b]])
            xs = np.array([fr.position(t) for fr in self.fronts[a:b]])
            xi += float(np.dot(jumps, w.W(xs)))
        return xi

    # -- scheduling ----------------------------------------------------

    def _push(self, time, kind, x, ids):
        self._seq += 1
        self.queue.schedule(ScheduledEvent(time, _PRIORITY[kind], x, self._seq, kind, ids))

    def _schedule_pair(self, i):
        if i < 0 or i + 1 >= len(self.fronts):
            return
        a, b = self.fronts[i], self.fronts[i + 1]
        if a.speed <= b.speed:
            return
        gap = b.position(self.now) - a.position(self.now)
        time = self.now + max(gap, 0.0) / (a.speed - b.speed)
        self._push(time, COLLISION, a.position(time), (a.id, b.id))

    def _schedule_exit(self, front):
        x = front.position(self.now)
        tol = position_tol(0.0)
        if (x < -tol and front.speed > 0) or (x > tol and front.speed < 0):
            time = front.t0 - front.x0 / front.speed
            self._push(max(time, self.now), EXIT, 0.0, (front.id,))

    def _valid(self, event):
        return all(i in self._alive for i in event.ids)

    def _peek_valid(self):
        while not self.queue.is_empty():
            event = self.queue.peek()
            if self._valid(event):
                return event
            self.queue.pop()
        return None

    def peek_time(self):
        event = self._peek_valid()
        return event.time if event is not None else math.inf

    def _pop_next(self):
        first = self._peek_valid()
        if first is None:
            return None
        self.queue.pop()
        batch = [first]
        while True:
            event = self._peek_valid()
            if event is None or event.time > first.time + SIMULTANEOUS_TOL:
                break
            batch.append(self.queue.pop())
        # Simultaneous events: leftmost first, exit hits before collisions
        chosen = min(batch, key=lambda e: (e.x, e.priority, e.seq))
        for event in batch:
            if event is not chosen:
                self.queue.schedule(event)
        return chosen

    # -- evolution -----------------------------------------------------

    def step(self, t_limit):
        """
        Process the next event if it happens no later than t_limit.

        Returns:
            TrackerOutcome or None when no event is due
        """
        if self.peek_time() > t_limit:
            return None
        event = self._pop_next()
        if event.time < self.now - TIME_TOL * max(1.0, self.now):
            logger.error(f"Event at t={event.time!r} is before the tracker clock t={self.now!r}")
            raise TrackingError(f"Event time regression at t={event.time!r}")
        self.event_count += 1
        if self.event_count > self.max_events:
            logger.error(f"Event cap of {self.max_events} reached at t={self.now!r}")
            raise TrackingError(f"No progress: more than {self.max_events} events")
        self.now = max(event.time, self.now)
        x = event.x
        if event.kind == EXIT or abs(x) <= position_tol(0.0):
            x = 0.0
        return self._interact(x, event.kind)

    def advance_to(self, t_end, on_event=None, h2_window=0.0):
        """
        Process every event up to t_end and move the clock there.

        An event falling within ``h2_window`` after t_end is processed at its
        own time and the end of the advance moves to that time.

        Returns:
            float: the time actually reached
        """
        while True:
            outcome = self.step(t_end)
            if outcome is None and h2_window > 0 and self.peek_time() <= t_end + h2_window:
                shifted = self.peek_time()
                logger.warning(f"Event at t={shifted!r} within {h2_window} of step end {t_end!r}; step end moved")
                outcome = self.step(shifted)
                outcome = _with_shift(outcome, shifted - t_end)
                t_end = shifted
            if outcome is None:
                break
            if on_event is not None:
                on_event(outcome)
        self.now = max(self.now, t_end)
        return t_end

    def move_to(self, t):
        """Move the clock to t, which must not skip a pending event."""
        if self.peek_time() < t - TIME_TOL * max(1.0, t):
            logger.error(f"Clock move to t={t!r} would skip an event at t={self.peek_time()!r}")
            raise TrackingError(f"Pending event before t={t!r}")
        self.now = max(self.now, t)

    def resolve_exit(self, t=None, exit_solver=None):
        """Re-solve the Riemann problem at x = 0 (after a change of the exit rule)."""
        if t is not None:
            self.now = max(self.now, t)
        if exit_solver is not None:
            self.exit_solver = exit_solver
        return self._interact(0.0, RESOLVE)

    def _interact(self, x, kind):
        t = self.now
        a, b = self.group_at(t, x)
        rho_l = self.fronts[a].rho_left if b > a else self.state_left_of(a)
        rho_r = self.fronts[b - 1].rho_right if b > a else rho_l
        self._check_chain(a, b)
        if x == 0.0:
            fan = self.exit_solver(rho_l, rho_r)
        else:
            fan = classical_riemann(self.f_n, rho_l, rho_r, self.exact)
        old = self.fronts[a:b]
        if _same_waves(old, fan.fronts):
            return TrackerOutcome(t, x, kind, tuple(old), tuple(old), rho_l, rho_r, unchanged=True)
        created = [self._new_front(x, front, fan.level) for front in fan.fronts]
        for front in old:
            self._retire(front, t)
        self.fronts[a:b] = created
        self._tv += self._tv_of(created) - self._tv_of(old)
        self._check_chain(max(a - 1, 0), min(a + len(created) + 1, len(self.fronts)))
        self._schedule_pair(a - 1)
        if created:
            self._schedule_pair(a + len(created) - 1)
        for front in created:
            self._schedule_exit(front)
        logger.debug(
            f"{kind} at t={t!r} x={x!r}: {len(old)} -> {len(created)} fronts ({rho_l!r} -> {rho_r!r})")
        return TrackerOutcome(t, x, kind, tuple(old), tuple(created), rho_l, rho_r)

    def _retire(self, front, t):
        front.alive = False
        del self._alive[front.id]
        self.segments.append(_segment(front, t))

    def _tv_of(self, fronts):
        return sum(abs(self._psi(fr.rho_right) - self._psi(fr.rho_left)) for fr in fronts)

    def _check_chain(self, a, b):
        for left, right in zip(self.fronts[a:b], self.fronts[a + 1:b]):
            if left.rho_right != right.rho_left:
                logger.error(f"State chain broken between fronts {left.id} and {right.id}")
                raise TrackingError(f"Front states do not chain at fronts {left.id}/{right.id}")

    def finalize(self, T):
        """Close the paths of the fronts still alive at the horizon T."""
        for front in self.fronts:
            self.segments.append(_segment(front, T))
        return self.segments


def _segment(front, t):
    return FrontSegment(
        front_id=front.id,
        t_start=front.t0,
        x_start=front.x0,
        t_end=t,
        x_end=front.position(t),
        rho_left=front.rho_left,
        rho_right=front.rho_right,
        kind=front.kind,
        level=front.level,
        speed=front.speed,
    )


def _same_waves(old, new):
    if len(old) != len(new):
        return False
    return all(
        (a.rho_left, a.rho_right, a.kind) == (b.rho_left, b.rho_right, b.kind) and a.speed == b.speed
        for a, b in zip(old, new)
    )


def _with_shift(outcome, shift):
    if outcome is None:
        return None
    return replace(outcome, shift=shift)
