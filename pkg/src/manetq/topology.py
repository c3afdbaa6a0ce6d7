"""Node placement, random-waypoint mobility, unit-disk links, power-state planning."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import _accel
from .engine import RandomStream


class NotConnected(ValueError):
    pass


class PlacementError(ValueError):
    pass


@dataclass(frozen=True)
class Area:
    width: float = 1000.0
    height: float = 1000.0

    def clamp(self, x: float, y: float) -> tuple[float, float]:
        return min(max(x, 0.0), self.width), min(max(y, 0.0), self.height)


@dataclass(frozen=True)
class Position:
    x: float
    y: float


@dataclass(frozen=True)
class MobilityParams:
    speed_min: float = 1.0
    speed_max: float = 5.0
    pause: float = 5.0


@dataclass(frozen=True)
class MobilityState:
    current: Position
    waypoint: Position
    speed: float
    pause_until: float = 0.0


@dataclass
class LinkSet:
    adjacency: dict[int, set[int]]
    range: float
    matrix: Optional[np.ndarray] = field(default=None, repr=False)

    def linked(self, i: int, j: int) -> bool:
        return j in self.adjacency.get(i, ())

    def neighbors(self, i: int) -> set[int]:
        return self.adjacency.get(i, set())

    def edges(self) -> list[tuple[int, int]]:
        return sorted((i, j) for i, nb in self.adjacency.items() for j in nb if i < j)


def _coords(positions) -> tuple[np.ndarray, np.ndarray]:
    pts = [p.current if isinstance(p, MobilityState) else p for p in positions]
    x = np.array([p.x if isinstance(p, Position) else p[0] for p in pts], dtype=float)
    y = np.array([p.y if isinstance(p, Position) else p[1] for p in pts], dtype=float)
    return x, y


def links_from_matrix(adj: np.ndarray, radius: float) -> LinkSet:
    adjacency = {i: set(np.flatnonzero(adj[i]).tolist()) for i in range(adj.shape[0])}
    return LinkSet(adjacency, radius, adj)


def rebuild_links(positions, radius: float, power: Optional[Sequence[bool]] = None) -> LinkSet:
    """Unit-disk link set over powered-on, alive nodes.

    ``positions`` may be MobilityStates, Positions or ``(x, y)`` pairs, or a
    pre-split ``(x_array, y_array)`` tuple of numpy arrays.
    """
    if not radius > 0:
        raise ValueError("range must be positive")
    if isinstance(positions, tuple) and len(positions) == 2 and isinstance(positions[0], np.ndarray):
        x, y = positions
    else:
        x, y = _coords(positions)
    active = np.ones(len(x), dtype=np.bool_) if power is None else np.asarray(power, dtype=np.bool_)
    adj = _accel.adjacency(np.ascontiguousarray(x, dtype=float), np.ascontiguousarray(y, dtype=float),
                           active, float(radius))
    return links_from_matrix(adj, radius)


def is_connected(links: LinkSet, alive: Iterable[int]) -> bool:
    alive = set(alive)
    if not alive:
        raise ValueError("alive set must be non-empty")
    start = min(alive)
    seen = {start}
    todo = deque([start])
    while todo:
        u = todo.popleft()
        for v in links.neighbors(u):
            if v in alive and v not in seen:
                seen.add(v)
                todo.append(v)
    return len(seen) == len(alive)


def bfs_hops(links: LinkSet, source: int, allowed: Optional[set[int]] = None) -> dict[int, int]:
    dist = {source: 0}
    todo = deque([source])
    while todo:
        u = todo.popleft()
        for v in sorted(links.neighbors(u)):
            if v not in dist and (allowed is None or v in allowed):
                dist[v] = dist[u] + 1
                todo.append(v)
    return dist


def bfs_path(links: LinkSet, source: int, target: int,
             allowed: Optional[set[int]] = None) -> Optional[list[int]]:
    prev = {source: None}
    todo = deque([source])
    while todo:
        u = todo.popleft()
        if u == target:
            path = []
            while u is not None:
                path.append(u)
                u = prev[u]
            return path[::-1]
        for v in sorted(links.neighbors(u)):
            if v not in prev and (allowed is None or v in allowed or v == target):
                prev[v] = u
                todo.append(v)
    return None


def count_interference_edges(positions, interference_range: float,
                             transmission_range: Optional[float] = None) -> int:
    """Unordered node pairs within ``interference_range`` of each other."""
    if transmission_range is not None and interference_range < transmission_range:
        raise ValueError("interference range must be >= transmission range")
    if isinstance(positions, tuple) and len(positions) == 2 and isinstance(positions[0], np.ndarray):
        x, y = positions
    else:
        x, y = _coords(positions)
    return _accel.count_pairs(np.ascontiguousarray(x, dtype=float),
                              np.ascontiguousarray(y, dtype=float), float(interference_range))


def plan_power_states(links: LinkSet, energies: Mapping[int, float],
                      protected: Iterable[int] = ()) -> set[int]:
    """Greedy sleep set: lowest residual energy first, survivors stay connected.

    A node may sleep when it is not protected (traffic endpoint), the awake
    graph without it stays connected with at least one edge, and every
    sleeping node keeps an awake neighbour.
    """
    awake = set(energies)
    if not awake:
        return set()
    if not is_connected(links, awake):
        raise NotConnected("network must be connected before planning sleep states")
    protected = set(protected)
    asleep: set[int] = set()
    changed = True
    while changed:
        changed = False
        for v in sorted(awake - protected, key=lambda n: (energies[n], n)):
            rest = awake - {v}
            if len(rest) < 2 or not is_connected(links, rest):
                continue
            if not any(u in rest for u in links.neighbors(v)):
                continue
            if any(not (links.neighbors(s) & rest) for s in asleep):
                continue
            awake = rest
            asleep.add(v)
            changed = True
            break
    return asleep


# --- mobility -----------------------------------------------------------

def _new_leg(stream: RandomStream, area: Area, params: MobilityParams) -> tuple[Position, float]:
    wx = stream.uniform(0.0, area.width)
    wy = stream.uniform(0.0, area.height)
    if params.speed_max > params.speed_min:
        speed = stream.uniform(params.speed_min, params.speed_max)
    else:
        speed = params.speed_min
    return Position(wx, wy), speed


def initial_mobility(pos: Position, stream: RandomStream, area: Area,
                     params: MobilityParams) -> MobilityState:
    wp, speed = _new_leg(stream, area, params)
    return MobilityState(pos, wp, speed, 0.0)


def advance_mobility(state: MobilityState, dt: float, stream: RandomStream, area: Area,
                     params: MobilityParams = MobilityParams(), now: float = 0.0) -> MobilityState:
    """Move one node for ``dt`` seconds starting at time ``now``."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    cx, cy = state.current.x, state.current.y
    wp, speed, pause_until = state.waypoint, state.speed, state.pause_until
    t, end = now, now + dt
    for _ in range(10_000):
        if t >= end:
            break
        if pause_until > t:
            t = pause_until
            continue
        if speed <= 0.0:
            break
        dx, dy = wp.x - cx, wp.y - cy
        dist = math.sqrt(dx * dx + dy * dy)
        step = speed * (end - t)
        if step >= dist:
            t += dist / speed
            cx, cy = wp.x, wp.y
            pause_until = t + params.pause
            wp, speed = _new_leg(stream, area, params)
        else:
            frac = step / dist
            cx, cy = cx + dx * frac, cy + dy * frac
            t = end
    cx, cy = area.clamp(cx, cy)
    return MobilityState(Position(cx, cy), wp, speed, pause_until)


class RandomWaypoint:
    """Array-backed random waypoint for all nodes; one stream per node."""

    def __init__(self, states: Sequence[MobilityState], streams: Sequence[RandomStream],
                 area: Area, params: MobilityParams):
        self.area = area
        self.params = params
        self.streams = list(streams)
        n = len(states)
        self.x = np.array([s.current.x for s in states], dtype=float)
        self.y = np.array([s.current.y for s in states], dtype=float)
        self.wx = np.array([s.waypoint.x for s in states], dtype=float)
        self.wy = np.array([s.waypoint.y for s in states], dtype=float)
        self.speed = np.array([s.speed for s in states], dtype=float)
        self.pause_until = np.array([s.pause_until for s in states], dtype=float)
        self.n = n

    def state(self, i: int) -> MobilityState:
        return MobilityState(Position(float(self.x[i]), float(self.y[i])),
                             Position(float(self.wx[i]), float(self.wy[i])),
                             float(self.speed[i]), float(self.pause_until[i]))

    def _set(self, i: int, s: MobilityState) -> None:
        self.x[i], self.y[i] = s.current.x, s.current.y
        self.wx[i], self.wy[i] = s.waypoint.x, s.waypoint.y
        self.speed[i], self.pause_until[i] = s.speed, s.pause_until

    def step(self, now: float, dt: float) -> None:
        if self.params.speed_max <= 0.0:
            return
        dx = self.wx - self.x
        dy = self.wy - self.y
        dist = np.sqrt(dx * dx + dy * dy)
        reach = self.speed * dt
        simple = (self.pause_until <= now) & (reach < dist) & (self.speed > 0.0)
        if simple.any():
            frac = np.zeros(self.n)
            np.divide(reach, dist, out=frac, where=simple)
            nx = np.where(simple, self.x + dx * frac, self.x)
            ny = np.where(simple, self.y + dy * frac, self.y)
            self.x = np.clip(nx, 0.0, self.area.width)
            self.y = np.clip(ny, 0.0, self.area.height)
        for i in np.flatnonzero(~simple & (self.speed > 0.0)).tolist():
            if self.pause_until[i] >= now + dt:
                continue
            self._set(i, advance_mobility(self.state(i), dt, self.streams[i], self.area,
                                          self.params, now))


def uniform_placement(n: int, stream: RandomStream, area: Area) -> list[Position]:
    return [Position(stream.uniform(0.0, area.width), stream.uniform(0.0, area.height))
            for _ in range(n)]


def load_placement(path, n: Optional[int] = None, area: Optional[Area] = None) -> list[Position]:
    """Read ``id x y`` lines (``#`` comments); ids must cover 0..n-1."""
    found: dict[int, Position] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise PlacementError(f"line {lineno}: expected 'id x y', got {raw!r}")
        try:
            nid, x, y = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError as exc:
            raise PlacementError(f"line {lineno}: {exc}") from None
        if nid in found:
            raise PlacementError(f"line {lineno}: duplicate node id {nid}")
        if area is not None and not (0 <= x <= area.width and 0 <= y <= area.height):
            raise PlacementError(f"line {lineno}: node {nid} outside area")
        found[nid] = Position(x, y)
    count = n if n is not None else len(found)
    if sorted(found) != list(range(count)):
        raise PlacementError(f"placement must list ids 0..{count - 1} exactly once")
    return [found[i] for i in range(count)]
