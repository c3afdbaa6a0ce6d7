"""Steady-state estimators, conservation residuals, and the M/M/1 closed forms."""

from __future__ import annotations

from dataclasses import dataclass

from .queue import QueueStats

EPS = 1e-12


class EmptyObservation(ValueError):
    pass


class UnstableQueue(ValueError):
    pass


@dataclass(frozen=True)
class SteadyStateEstimates:
    d: float  # mean delay in queue
    w: float  # mean time in system
    Q: float  # time-average number in queue
    L: float  # time-average number in system
    blocking_probability: float = 0.0
    arrival_rate: float = float("nan")
    mean_service: float = float("nan")
    n: int = 0
    horizon: float = 0.0
    p_delay: float = float("nan")
    idle_fraction: float = float("nan")


def steady_state(stats: QueueStats) -> SteadyStateEstimates:
    """Finite-horizon estimates: means over customers and over time."""
    T = stats.horizon
    if stats.n == 0 or T <= 0:
        raise EmptyObservation(f"need n >= 1 and T > 0 (n={stats.n}, T={T})")
    n = stats.n
    return SteadyStateEstimates(
        d=stats.sum_d / n,
        w=stats.sum_w / n,
        Q=stats.area_q / T,
        L=stats.area_l / T,
        blocking_probability=stats.drops / stats.offered if stats.offered else 0.0,
        arrival_rate=stats.arrivals / T,
        mean_service=stats.sum_s / n,
        n=n,
        horizon=T,
        p_delay=stats.delayed / n,
        idle_fraction=stats.idle_time / T,
    )


def check_conservation(est: SteadyStateEstimates, lam: float) -> tuple[float, float]:
    """Relative residuals of Q = lam*d and L = lam*w."""
    rq = abs(est.Q - lam * est.d) / max(est.Q, EPS)
    rl = abs(est.L - lam * est.w) / max(est.L, EPS)
    return rq, rl


def mm1_oracle(lam: float, mu: float) -> SteadyStateEstimates:
    if mu <= 0 or lam < 0:
        raise ValueError("rates must satisfy lam >= 0, mu > 0")
    if lam >= mu:
        raise UnstableQueue(f"lam={lam} >= mu={mu}")
    rho = lam / mu
    w = 1.0 / (mu - lam)
    d = w - 1.0 / mu
    return SteadyStateEstimates(d=d, w=w, Q=lam * d, L=rho / (1.0 - rho),
                                arrival_rate=lam, mean_service=1.0 / mu,
                                p_delay=rho, idle_fraction=1.0 - rho)


def mm1k_blocking(lam: float, mu: float, k: int) -> float:
    """Blocking probability of M/M/1/K (K = system capacity)."""
    rho = lam / mu
    if abs(rho - 1.0) < 1e-12:
        return 1.0 / (k + 1)
    return (1.0 - rho) * rho ** k / (1.0 - rho ** (k + 1))
