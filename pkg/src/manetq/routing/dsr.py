"""Dynamic Source Routing: route cache, duplicate suppression and per-node decisions.

The functions here decide what a node does with a packet; the network
simulator carries the decisions out (transmissions, timers, energy).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

from ..packets import DATA, RERR, RREP, RREQ, Packet, loop_free, splice_loops


class BufferOverflow(RuntimeError):
    pass


class NotOnRoute(AssertionError):
    pass


@dataclass(frozen=True)
class DsrParams:
    max_ttl: int = 16
    cache_reply: bool = True
    promiscuous: bool = True
    retransmit_limit: int = 3
    cache_size: int = 4
    seen_expiry: float = 30.0
    buffer_capacity: int = 64
    buffer_timeout: float = 10.0
    request_timeout: float = 0.5
    max_request_timeout: float = 10.0
    replies: int = 1


# --- actions -------------------------------------------------------------

class Send(NamedTuple):
    packet: Packet


class StartDiscovery(NamedTuple):
    rreq: Packet
    buffered: Packet


class Buffered(NamedTuple):
    packet: Packet


class Forward(NamedTuple):
    packet: Packet


class Reply(NamedTuple):
    rrep: Packet


class Drop(NamedTuple):
    reason: str


class Relay(NamedTuple):
    next_hop: int


class Deliver(NamedTuple):
    packet: Packet


Action = Union[Send, StartDiscovery, Buffered, Forward, Reply, Drop, Relay, Deliver]


# --- route cache -----------------------------------------------------------

class RouteCache:
    """Per-destination source routes, newest last, capped per destination.

    Preference order is fewest hops, then oldest insertion.
    """

    def __init__(self, owner: int, capacity: int = 4):
        self.owner = owner
        self.capacity = capacity
        self.routes: dict[int, list[tuple[tuple[int, ...], float]]] = {}
        # full routes whose prefixes are all cached; cleared whenever anything leaves
        self._absorbed: set[tuple[int, ...]] = set()

    def __contains__(self, dest: int) -> bool:
        return bool(self.routes.get(dest))

    def __len__(self) -> int:
        return sum(len(v) for v in self.routes.values())

    def add(self, route, now: float) -> bool:
        route = tuple(route)
        if len(route) < 2 or route[0] != self.owner or not loop_free(route):
            return False
        return self._insert(route, now)

    def _insert(self, route: tuple[int, ...], now: float) -> bool:
        entries = self.routes.get(route[-1])
        if entries is None:
            self.routes[route[-1]] = [(route, now)]
            return True
        for r, _ in entries:
            if r == route:
                return False
        if len(entries) >= self.capacity:
            entries.pop(0)
            self._absorbed.clear()
        entries.append((route, now))
        return True

    def add_prefixes(self, route, now: float) -> int:
        """Cache the route to every node along ``route`` (which starts here)."""
        route = tuple(route)
        if route in self._absorbed:
            return 0
        if len(route) < 2 or route[0] != self.owner or not loop_free(route):
            return 0
        added = 0
        for k in range(2, len(route) + 1):
            added += self._insert(route[:k], now)
        self._absorbed.add(route)
        return added

    def candidates(self, dest: int) -> list[tuple[int, ...]]:
        entries = self.routes.get(dest, ())
        ranked = sorted(range(len(entries)), key=lambda i: (len(entries[i][0]), entries[i][1], i))
        return [entries[i][0] for i in ranked]

    def best(self, dest: int) -> Optional[tuple[int, ...]]:
        c = self.candidates(dest)
        return c[0] if c else None

    def purge_link(self, a: int, b: int) -> int:
        """Drop every cached route using link a-b in either direction."""
        self._absorbed.clear()
        purged = 0
        for dest in list(self.routes):
            keep = []
            for r, t in self.routes[dest]:
                if _uses_link(r, a, b):
                    purged += 1
                else:
                    keep.append((r, t))
            if keep:
                self.routes[dest] = keep
            else:
                del self.routes[dest]
        return purged

    def purge_node(self, n: int) -> int:
        self._absorbed.clear()
        purged = 0
        for dest in list(self.routes):
            keep = [(r, t) for r, t in self.routes[dest] if n not in r[1:]]
            purged += len(self.routes[dest]) - len(keep)
            if keep:
                self.routes[dest] = keep
            else:
                del self.routes[dest]
        return purged


def _uses_link(route, a: int, b: int) -> bool:
    # cached routes are loop-free, so each node appears at most once
    if a not in route or b not in route:
        return False
    i = route.index(a)
    return (i + 1 < len(route) and route[i + 1] == b) or (i > 0 and route[i - 1] == b)


class SeenRequests:
    def __init__(self, expiry: float = 30.0):
        self.expiry = expiry
        self._seen: dict[tuple[int, int], float] = {}

    def __contains__(self, key: tuple[int, int]) -> bool:
        return key in self._seen

    def seen(self, key: tuple[int, int], now: float) -> bool:
        t = self._seen.get(key)
        if t is None:
            return False
        if t < now:
            del self._seen[key]
            return False
        return True

    def mark(self, key: tuple[int, int], now: float) -> None:
        self._seen[key] = now + self.expiry
        if len(self._seen) > 4096:
            self._seen = {k: t for k, t in self._seen.items() if t >= now}


@dataclass
class DsrState:
    """Protocol state owned by one node."""

    node: int
    params: DsrParams = field(default_factory=DsrParams)

    def __post_init__(self):
        self.cache = RouteCache(self.node, self.params.cache_size)
        self.seen = SeenRequests(self.params.seen_expiry)
        self.next_request_id = 0
        self.pending: dict[int, deque[tuple[Packet, float]]] = {}
        self.replies: dict[tuple[int, int], int] = {}

    def pending_count(self) -> int:
        return sum(len(q) for q in self.pending.values())

    def new_rreq(self, destination: int, now: float, bits: int) -> Packet:
        rid = self.next_request_id
        self.next_request_id += 1
        self.seen.mark((self.node, rid), now)
        return Packet(RREQ, self.node, destination, request_id=rid, ttl=self.params.max_ttl,
                      traversed=(self.node,), costs=(0.0,), bits=bits, created=now)

    def buffer(self, packet: Packet, now: float) -> None:
        if self.pending_count() >= self.params.buffer_capacity:
            raise BufferOverflow(f"send buffer of node {self.node} is full")
        self.pending.setdefault(packet.destination, deque()).append((packet, now))

    def expire_pending(self, now: float) -> list[Packet]:
        out = []
        for dest in list(self.pending):
            q = self.pending[dest]
            while q and now - q[0][1] > self.params.buffer_timeout:
                out.append(q.popleft()[0])
            if not q:
                del self.pending[dest]
        return out


# --- decisions ---------------------------------------------------------------

def originate_data(state: DsrState, packet: Packet, now: float,
                   route: Optional[tuple[int, ...]] = None,
                   discovering: bool = False, control_bits: int = 512) -> Action:
    """Decide how a freshly generated DATA packet leaves its source.

    ``route`` is the protocol's choice from the cache (DSR: fewest hops).
    Raises BufferOverflow when the packet must wait and the buffer is full.
    """
    if packet.destination == state.node:
        packet.route = (state.node,)
        return Deliver(packet)
    if route is None:
        route = state.cache.best(packet.destination)
    if route is not None:
        packet.route = tuple(route)
        packet.hop = 0
        packet.ttl = len(route) - 1
        return Send(packet)
    state.buffer(packet, now)
    if discovering:
        return Buffered(packet)
    return StartDiscovery(state.new_rreq(packet.destination, now, control_bits), packet)


def handle_rreq(state: DsrState, rreq: Packet, now: float,
                own_cost: float = 0.0, allow_cache_reply: bool = True) -> Action:
    node = state.node
    key = (rreq.source, rreq.request_id)
    if node in rreq.traversed:
        return Drop("loop")
    if node == rreq.destination:
        n = state.replies.get(key, 0)
        if n >= state.params.replies:
            return Drop("duplicate")
        state.replies[key] = n + 1
        state.seen.mark(key, now)
        route = rreq.traversed + (node,)
        costs = rreq.costs + (0.0,)
        return Reply(Packet(RREP, node, rreq.source, request_id=rreq.request_id,
                            route=route, costs=costs, path=route[::-1], hop=0,
                            bits=rreq.bits, created=now))
    if state.seen.seen(key, now):
        return Drop("duplicate")
    if rreq.ttl <= 0:
        return Drop("ttl")
    state.seen.mark(key, now)
    if state.params.cache_reply and allow_cache_reply:
        cached = state.cache.best(rreq.destination)
        if cached is not None:
            route = splice_loops(rreq.traversed + cached)
            if route[0] == rreq.source and route[-1] == rreq.destination and node in route:
                known = dict(zip(rreq.traversed, rreq.costs))
                known[node] = own_cost
                costs = tuple(known.get(n, 0.0) for n in route)
                back = route[:route.index(node) + 1][::-1]
                return Reply(Packet(RREP, node, rreq.source, request_id=rreq.request_id,
                                    route=route, costs=costs, path=back, hop=0,
                                    bits=rreq.bits, created=now))
    return Forward(rreq.copy(traversed=rreq.traversed + (node,), costs=rreq.costs + (own_cost,),
                             ttl=rreq.ttl - 1))


def forward_data(state: DsrState, data: Packet) -> Action:
    node = state.node
    route = data.route
    if data.hop >= len(route) or route[data.hop] != node:
        if node not in route:
            raise NotOnRoute(f"node {node} not on route {route}")
        data.hop = route.index(node)
    if node == data.destination:
        return Deliver(data)
    return Relay(route[data.hop + 1])


def make_rerr(node: int, data: Packet, next_hop: int, now: float, bits: int,
              kind: str = RERR) -> Packet:
    """Error packet from ``node`` back along the data packet's route to its source."""
    idx = data.route.index(node)
    back = data.route[:idx + 1][::-1]
    return Packet(kind, node, data.source, broken=(node, next_hop), path=back, hop=0,
                  bits=bits, created=now, uid=data.uid)


def handle_rerr(state: DsrState, rerr: Packet) -> int:
    if rerr.kind != RERR or rerr.broken is None:
        return 0
    return state.cache.purge_link(*rerr.broken)


def promiscuous_learn(state: DsrState, packet: Packet, transmitter: int, now: float,
                      enabled: bool = True) -> int:
    """Cache routes implied by an overheard packet sent by ``transmitter``."""
    if not enabled:
        return 0
    me = state.node
    if packet.kind == RREQ:
        trav = packet.traversed
        if me in trav or not trav or trav[-1] != transmitter:
            return 0
        return state.cache.add_prefixes((me,) + trav[::-1], now)
    if packet.kind in (DATA, RREP):
        # an RREP travels backwards but still carries the forward route
        route = packet.route
        if not route or transmitter not in route:
            return 0
        if me in route:
            return state.cache.add_prefixes(route[route.index(me):], now)
        return state.cache.add_prefixes((me,) + route[route.index(transmitter):], now)
    return 0
