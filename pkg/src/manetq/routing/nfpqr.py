"""Queue- and energy-aware extension of DSR (NFPQR).

NFPQR adds to DSR: a finite forwarding queue per node, a route metric that
sums per-node queueing and battery costs, and suppression of route requests
at congested or depleted nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from ..queueing.queue import QueueStats, ServiceQueue

FORWARD, SUPPRESS = "Forward", "Suppress"
TIE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class NfpqrParams:
    alpha: float = 1.0
    beta: float = 1.0
    theta_q: float = 0.8
    theta_e: float = 0.1
    w_ref: Optional[float] = None  # None: 10 mean service times
    window: int = 50
    replies: int = 3

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta <= 0:
            raise ValueError("alpha, beta must be >= 0 with alpha + beta > 0")
        if self.w_ref is not None and self.w_ref <= 0:
            raise ValueError("w_ref must be positive")


@dataclass(frozen=True)
class NodeCost:
    w_est: float
    energy_fraction: float
    cost: float


def window_wait(stats: QueueStats) -> float:
    """Mean time in system over the recent completion window, 0 when empty."""
    recent = stats.recent_waits
    return sum(recent) / len(recent) if recent else 0.0


def node_cost(w_est: float, energy_fraction: float, alpha: float, beta: float,
              w_ref: float) -> NodeCost:
    if alpha < 0 or beta < 0 or alpha + beta <= 0:
        raise ValueError("alpha, beta must be >= 0 with alpha + beta > 0")
    if w_ref <= 0:
        raise ValueError("w_ref must be positive")
    w_est = max(0.0, w_est)
    e = min(max(energy_fraction, 0.0), 1.0)
    return NodeCost(w_est, e, alpha * min(w_est / w_ref, 1.0) + beta * (1.0 - e))


def route_cost(route: Sequence[int], costs: Mapping[int, float]) -> float:
    """Sum of node costs over the intermediate nodes of ``route``."""
    return sum(costs.get(n, 0.0) for n in route[1:-1])


def select_route(candidates: Iterable[Sequence[int]], costs: Mapping[int, float]) -> tuple[int, ...]:
    """Cheapest route; ties (relative 1e-9) go to fewer hops, then the smallest id sequence."""
    cands = [tuple(r) for r in candidates]
    if not cands:
        raise ValueError("no candidate routes")
    scored = [(route_cost(r, costs), r) for r in cands]
    best = min(c for c, _ in scored)
    tol = TIE_TOLERANCE * abs(best)
    tied = [r for c, r in scored if c <= best + tol]
    return min(tied, key=lambda r: (len(r), r))


def admit_rreq(is_destination: bool, occupancy_fraction: float, energy_fraction: float,
               theta_q: float, theta_e: float) -> str:
    if is_destination:
        return FORWARD
    if occupancy_fraction > theta_q or energy_fraction < theta_e:
        return SUPPRESS
    return FORWARD


def enqueue_forwarding(queue: ServiceQueue, packet, now: float, key: float = 1.0) -> bool:
    """Offer a packet to a node's finite forwarding queue; False means blocked."""
    return queue.enqueue(packet, now, key)


def default_w_ref(service_rate: float) -> float:
    return 10.0 / service_rate if service_rate > 0 and math.isfinite(service_rate) else 1.0
