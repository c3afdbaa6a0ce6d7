"""Per-node energy accounting and network lifetime."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

log = logging.getLogger(__name__)

ON, SLEEP, DEAD = "on", "sleep", "dead"
ACTIVITIES = ("tx", "rx", "idle", "sleep")


@dataclass(frozen=True)
class EnergyModel:
    p_tx: float = 1.4
    p_rx: float = 1.0
    p_idle: float = 0.83
    p_sleep: float = 0.13
    initial: float = 100.0
    bit_time: float = 1.0 / 2e6

    def __post_init__(self):
        if not (self.p_tx >= self.p_rx > self.p_idle > self.p_sleep >= 0):
            raise ValueError("power profile must satisfy p_tx >= p_rx > p_idle > p_sleep >= 0")
        if self.initial <= 0 or self.bit_time <= 0:
            raise ValueError("initial energy and bit time must be positive")
        if self.p_idle / self.p_rx < 0.7:
            log.warning("idle power %.3g W is well below receive power %.3g W", self.p_idle, self.p_rx)

    def power(self, activity: str) -> float:
        return {"tx": self.p_tx, "rx": self.p_rx, "idle": self.p_idle, "sleep": self.p_sleep}[activity]

    def airtime(self, bits: int) -> float:
        return bits * self.bit_time


@dataclass
class NodeEnergy:
    residual: float
    state: str = ON
    death_time: Optional[float] = None
    spent: float = 0.0

    @classmethod
    def fresh(cls, model: EnergyModel) -> "NodeEnergy":
        return cls(model.initial)

    @property
    def alive(self) -> bool:
        return self.state != DEAD


def drain(node: NodeEnergy, watts: float, duration: float, now: float = 0.0) -> NodeEnergy:
    """Drain ``watts * duration`` starting at ``now``; mutates and returns ``node``.

    The death time is the exact crossing instant within the charged interval.
    """
    if duration < 0:
        raise ValueError("duration must be non-negative")
    if watts < 0:
        raise ValueError("power must be non-negative")
    if node.state == DEAD or duration == 0 or watts == 0:
        return node
    cost = watts * duration
    if cost >= node.residual:
        node.death_time = now + node.residual / watts
        node.spent += node.residual
        node.residual = 0.0
        node.state = DEAD
    else:
        node.residual -= cost
        node.spent += cost
    return node


def charge(node: NodeEnergy, activity: str, duration: float, model: EnergyModel,
           now: float = 0.0) -> NodeEnergy:
    """Drain ``p_activity * duration`` starting at ``now``."""
    return drain(node, model.power(activity), duration, now)


def charge_over_idle(node: NodeEnergy, activity: str, duration: float, model: EnergyModel,
                     now: float = 0.0) -> NodeEnergy:
    """Drain only the excess of ``activity`` over idle listening.

    For a radio whose idle draw is already settled for the whole interval,
    this brings the total for the active part up to ``p_activity * duration``.
    """
    return drain(node, model.power(activity) - model.p_idle, duration, now)


def network_lifetime(nodes: Iterable[NodeEnergy]) -> Optional[float]:
    """Time of the first node death, or None if every node survived."""
    deaths = [n.death_time for n in nodes if n.death_time is not None]
    return min(deaths) if deaths else None
