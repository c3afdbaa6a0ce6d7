"""Stand-alone queue simulations driven by the event engine."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _accel
from ..engine import PACKET_ARRIVAL, Event, Simulator, Streams, draw_exponential
from .kendall import INF, KendallSpec
from .measures import SteadyStateEstimates, steady_state
from .queue import FIFO, QueueStats, ServiceQueue, discipline_name


class UnsupportedDistribution(NotImplementedError):
    pass


@dataclass
class QueueRun:
    stats: QueueStats
    estimates: SteadyStateEstimates
    customers: int
    warmup: int
    dispatched: int


def simulate_queue(lam: float, mu: float, customers: int, *, seed: int = 1,
                   warmup: float = 0.05, discipline: str = FIFO, capacity: float = math.inf,
                   servers: int = 1, classes: int = 2, keep_samples: bool = True) -> QueueRun:
    """Poisson arrivals at ``lam`` into exponential servers at ``mu``.

    The first ``warmup`` fraction of arrivals is discarded; the observation
    window runs from the first measured arrival to the last arrival.
    Under the priority discipline each customer gets a uniform class in
    ``range(classes)``.
    """
    if customers < 1:
        raise ValueError("customers must be >= 1")
    discipline = discipline_name(discipline)
    sim = Simulator()
    streams = Streams(seed)
    arrivals, service, prio = streams["arrivals"], streams["service"], streams["priority"]
    q = ServiceQueue(sim, lambda c: draw_exponential(service, mu), servers=servers,
                     capacity=capacity, discipline=discipline,
                     stats=QueueStats(0.0, keep_samples=keep_samples))
    n_warm = int(customers * warmup)
    count = 0

    def arrive() -> None:
        nonlocal count
        now = sim.clock
        if count == n_warm:
            q.observe(now)
            q.stats.reset(now)
        key = prio.integers(0, classes) if discipline != FIFO and classes > 1 else 0
        q.enqueue(count, now, key)
        count += 1
        if count < customers:
            sim.schedule(Event(now + draw_exponential(arrivals, lam), PACKET_ARRIVAL, (arrive, ())))
        else:
            q.observe(now)
            sim.stop()

    sim.schedule(Event(draw_exponential(arrivals, lam), PACKET_ARRIVAL, (arrive, ())))
    sim.run_until(math.inf)
    return QueueRun(q.stats, steady_state(q.stats), customers, n_warm, sim.dispatched)


def simulate_kendall(spec: KendallSpec, lam: float, mu: float, customers: int, **kw) -> QueueRun:
    if spec.arrival != "M" or spec.service != "M":
        raise UnsupportedDistribution(
            f"only exponential (M) arrivals and service are executable, got {spec}")
    if spec.population != INF:
        raise UnsupportedDistribution("finite calling populations are not executable")
    rule = {"FCFS": "FIFO", "LCFS": "LIFO", "PRI": "PRIORITY"}[spec.ranking]
    return simulate_queue(lam, mu, customers, discipline=rule, capacity=spec.capacity,
                          servers=spec.servers, **kw)


def lindley_delays(lam: float, mu: float, customers: int, seed: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """FIFO M/M/1 queue delays by Lindley recursion on the same draw streams.

    Returns ``(delays, services)`` for every customer, warm-up included.
    """
    streams = Streams(seed)
    a = streams["arrivals"].gen.standard_exponential(customers) / lam
    s = streams["service"].gen.standard_exponential(customers) / mu
    return _accel.lindley(a, s), s
