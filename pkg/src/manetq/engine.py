"""Discrete-event engine: future-event list, clock, seeded random streams."""

from __future__ import annotations

import hashlib
import heapq
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

# Events closer than this are tied and resolved by insertion order.
TIME_RESOLUTION = 1e-12


class SchedulingInPast(ValueError):
    pass


class NonPositiveRate(ValueError):
    pass


# event kinds
PACKET_ARRIVAL = "PacketArrival"
SERVICE_COMPLETE = "ServiceComplete"
MOVE_UPDATE = "MoveUpdate"
TRAFFIC_GEN = "TrafficGen"
TIMER = "Timer"
POWER_STATE_CHANGE = "PowerStateChange"

EVENT_KINDS = (PACKET_ARRIVAL, SERVICE_COMPLETE, MOVE_UPDATE, TRAFFIC_GEN,
               TIMER, POWER_STATE_CHANGE)


@dataclass(eq=False)
class Event:
    time: float
    kind: str = TIMER
    payload: Any = None
    seq: int = -1
    cancelled: bool = field(default=False, repr=False)

    def cancel(self) -> None:
        self.cancelled = True


def _time_key(t: float) -> int:
    if math.isinf(t):
        return 1 << 80
    return int(round(t / TIME_RESOLUTION))


class Simulator:
    """Single-threaded event loop.

    The payload of an event is either a callable taking the event, or any
    object handled by a dispatcher registered for the event kind.
    """

    def __init__(self, start: float = 0.0):
        self.clock = float(start)
        self._heap: list[tuple[int, int, Event]] = []
        self._seq = 0
        self._handlers: dict[str, Callable[[Event], None]] = {}
        self._stopped = False
        self.dispatched = 0
        self.log: Optional[list[tuple[float, int]]] = None

    def __len__(self) -> int:
        return len(self._heap)

    def on(self, kind: str, handler: Callable[[Event], None]) -> None:
        self._handlers[kind] = handler

    def schedule(self, event: Event) -> Event:
        if event.time < self.clock - TIME_RESOLUTION or math.isnan(event.time):
            raise SchedulingInPast(
                f"event at t={event.time!r} scheduled when clock={self.clock!r}")
        if event.time < self.clock:
            event.time = self.clock
        event.seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (_time_key(event.time), event.seq, event))
        return event

    def at(self, time: float, fn: Callable[..., None], *args,
           kind: str = TIMER) -> Event:
        """Schedule ``fn(*args)`` at absolute ``time``."""
        return self.schedule(Event(time, kind, (fn, args)))

    def after(self, delay: float, fn: Callable[..., None], *args,
              kind: str = TIMER) -> Event:
        return self.at(self.clock + delay, fn, *args, kind=kind)

    def peek(self) -> float:
        while self._heap and self._heap[0][2].cancelled:
            heapq.heappop(self._heap)
        return self._heap[0][2].time if self._heap else math.inf

    def pop(self) -> Optional[Event]:
        while self._heap:
            ev = heapq.heappop(self._heap)[2]
            if not ev.cancelled:
                return ev
        return None

    def stop(self) -> None:
        self._stopped = True

    def _dispatch(self, ev: Event) -> None:
        payload = ev.payload
        if type(payload) is tuple:
            fn, args = payload
            fn(*args)
        elif callable(payload):
            payload(ev)
        else:
            handler = self._handlers.get(ev.kind)
            if handler is None:
                raise KeyError(f"no handler for event kind {ev.kind!r}")
            handler(ev)

    def run_until(self, t_end: float = math.inf) -> float:
        if t_end < self.clock:
            raise SchedulingInPast(f"run_until({t_end}) with clock={self.clock}")
        self._stopped = False
        heap = self._heap
        end_key = _time_key(t_end)
        log = self.log
        while heap and not self._stopped:
            key, seq, ev = heap[0]
            if key > end_key:
                break
            heapq.heappop(heap)
            if ev.cancelled:
                continue
            self.clock = ev.time
            if log is not None:
                log.append((ev.time, seq))
            self.dispatched += 1
            self._dispatch(ev)
        if not self._stopped and not math.isinf(t_end):
            self.clock = t_end
        return self.clock


def stream_key(label: str) -> int:
    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "little")


class RandomStream:
    """Independent substream derived from ``(seed, stream_id)``.

    Philox4x64 keyed through ``SeedSequence(seed, spawn_key=(sha256(id),))``;
    no state is shared between streams, so the draw sequence of one stream
    does not depend on how others are consumed.
    """

    def __init__(self, seed: int, stream_id: str):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_id = stream_id
        ss = np.random.SeedSequence(self.seed, spawn_key=(stream_key(stream_id),))
        self.gen = np.random.Generator(np.random.Philox(ss))

    def random(self) -> float:
        return float(self.gen.random())

    def uniform(self, lo: float, hi: float) -> float:
        return float(self.gen.uniform(lo, hi))

    def exponential(self, rate: float) -> float:
        return draw_exponential(self, rate)

    def integers(self, lo: int, hi: int) -> int:
        return int(self.gen.integers(lo, hi))

    def choice(self, n: int, size: int) -> list[int]:
        return [int(i) for i in self.gen.choice(n, size=size, replace=False)]


def draw_exponential(stream: RandomStream, rate: float) -> float:
    if not rate > 0:
        raise NonPositiveRate(f"rate must be positive, got {rate}")
    return float(stream.gen.standard_exponential()) / rate


class Streams:
    """Lazily created named streams for one run."""

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: dict[str, RandomStream] = {}

    def __getitem__(self, stream_id: str) -> RandomStream:
        s = self._streams.get(stream_id)
        if s is None:
            s = self._streams[stream_id] = RandomStream(self.seed, stream_id)
        return s
