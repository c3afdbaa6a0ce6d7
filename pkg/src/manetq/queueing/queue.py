"""Event-driven multi-server queue with FIFO / LIFO / priority disciplines."""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Optional

from ..engine import SERVICE_COMPLETE, Event, Simulator

FIFO, LIFO, PRIORITY = "FIFO", "LIFO", "PRIORITY"
_ALIASES = {"FIFO": FIFO, "FCFS": FIFO, "LIFO": LIFO, "LCFS": LIFO,
            "PRIORITY": PRIORITY, "PRI": PRIORITY}


def discipline_name(rule: str) -> str:
    try:
        return _ALIASES[rule.upper()]
    except KeyError:
        raise ValueError(f"unknown queue discipline {rule!r}") from None


@dataclass(slots=True)
class Customer:
    item: Any
    arrival: float
    key: float
    order: int
    start: float
    service: float


class QueueStats:
    """Accumulators for delays, waits, and the Q(t)/L(t) time integrals."""

    def __init__(self, start: float = 0.0, keep_samples: bool = True, window: int = 0):
        self.keep_samples = keep_samples
        self.window = window
        self.recent_waits: deque[float] = deque(maxlen=window or None)
        self.reset(start)

    def reset(self, now: float) -> None:
        self.start = now
        self.last = now
        self.area_q = 0.0
        self.area_l = 0.0
        self.idle_time = 0.0
        self.n = 0
        self.sum_d = 0.0
        self.sum_w = 0.0
        self.sum_s = 0.0
        self.delayed = 0
        self.arrivals = 0
        self.offered = 0
        self.drops = 0
        self.delays: list[float] = []
        self.waits: list[float] = []
        self.services: list[float] = []

    @property
    def horizon(self) -> float:
        return self.last - self.start

    def advance(self, now: float, q: int, l: int) -> None:
        dt = now - self.last
        if dt > 0:
            self.area_q += q * dt
            self.area_l += l * dt
            if l == 0:
                self.idle_time += dt
            self.last = now

    def record(self, d: float, w: float, s: float) -> None:
        self.n += 1
        self.sum_d += d
        self.sum_w += w
        self.sum_s += s
        if d > 0:
            self.delayed += 1
        if self.keep_samples:
            self.delays.append(d)
            self.waits.append(w)
            self.services.append(s)
        if self.window:
            self.recent_waits.append(w)


class ServiceQueue:
    """``servers`` identical servers in front of one shared waiting line.

    Service times are drawn when service starts, so every work-conserving
    discipline sees the same departure epochs for the same draw sequence.
    Capacity counts customers in the system (waiting plus in service).
    """

    def __init__(self, sim: Simulator, service_time: Callable[[Customer], float],
                 servers: int = 1, capacity: float = math.inf, discipline: str = FIFO,
                 on_depart: Optional[Callable[[Customer, float], None]] = None,
                 stats: Optional[QueueStats] = None):
        if servers < 1:
            raise ValueError("servers must be >= 1")
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.sim = sim
        self.service_time = service_time
        self.servers = servers
        self.capacity = capacity
        self.discipline = discipline_name(discipline)
        self.on_depart = on_depart
        self.stats = stats if stats is not None else QueueStats(sim.clock)
        self.busy = 0
        self._order = 0
        self._fifo: deque[Customer] = deque()
        self._stack: list[Customer] = []
        self._heap: list[tuple[float, int, Customer]] = []
        self._in_service: dict[int, tuple[Customer, Event]] = {}

    def __len__(self) -> int:
        return self.waiting + self.busy

    @property
    def waiting(self) -> int:
        return len(self._fifo) + len(self._stack) + len(self._heap)

    @property
    def occupancy(self) -> int:
        return self.waiting + self.busy

    def occupancy_fraction(self) -> float:
        if math.isinf(self.capacity):
            return 0.0
        return self.occupancy / self.capacity

    def _push(self, c: Customer) -> None:
        if self.discipline == FIFO:
            self._fifo.append(c)
        elif self.discipline == LIFO:
            self._stack.append(c)
        else:
            heapq.heappush(self._heap, (c.key, c.order, c))

    def _pop(self) -> Customer:
        if self.discipline == FIFO:
            return self._fifo.popleft()
        if self.discipline == LIFO:
            return self._stack.pop()
        return heapq.heappop(self._heap)[2]

    def enqueue(self, item: Any, now: float, key: float = 0.0) -> bool:
        st = self.stats
        st.advance(now, self.waiting, self.busy + self.waiting)
        st.offered += 1
        if self.occupancy >= self.capacity:
            st.drops += 1
            return False
        st.arrivals += 1
        c = Customer(item, now, key, self._order, math.nan, math.nan)
        self._order += 1
        if self.busy < self.servers:
            self._start(c, now)
        else:
            self._push(c)
        return True

    def _start(self, c: Customer, now: float) -> None:
        c.start = now
        c.service = self.service_time(c)
        self.busy += 1
        ev = self.sim.schedule(Event(now + c.service, SERVICE_COMPLETE, (self._complete, (c,))))
        self._in_service[c.order] = (c, ev)

    def _complete(self, c: Customer) -> None:
        now = self.sim.clock
        st = self.stats
        st.advance(now, self.waiting, self.busy + self.waiting)
        self.busy -= 1
        del self._in_service[c.order]
        if c.arrival >= st.start:
            st.record(c.start - c.arrival, now - c.arrival, c.service)
        if self.waiting:
            self._start(self._pop(), now)
        if self.on_depart is not None:
            self.on_depart(c, now)

    def flush(self, now: float) -> list[Customer]:
        """Remove every customer (node failure); returns them, none complete."""
        self.stats.advance(now, self.waiting, self.busy + self.waiting)
        out = [c for c, _ in self._in_service.values()]
        for _, ev in self._in_service.values():
            ev.cancel()
        self._in_service.clear()
        self.busy = 0
        while self.waiting:
            out.append(self._pop())
        return out

    def observe(self, now: float) -> None:
        """Close the time integrals at ``now``."""
        self.stats.advance(now, self.waiting, self.busy + self.waiting)
