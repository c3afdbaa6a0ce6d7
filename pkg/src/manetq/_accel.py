"""Numeric kernels, compiled with numba when available.

Set ``MANETQ_NUMBA=0`` to force the pure-numpy implementations. Both paths
evaluate identical floating-point expressions so results match bit for bit.
"""

from __future__ import annotations

import os

import numpy as np

_WANT_NUMBA = os.environ.get("MANETQ_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

try:
    if not _WANT_NUMBA:
        raise ImportError
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False


# --- pure numpy ---------------------------------------------------------

def adjacency_numpy(x: np.ndarray, y: np.ndarray, active: np.ndarray, radius: float) -> np.ndarray:
    dx = x[:, None] - x[None, :]
    dy = y[:, None] - y[None, :]
    adj = (dx * dx + dy * dy) <= radius * radius
    adj &= active[:, None] & active[None, :]
    np.fill_diagonal(adj, False)
    return adj


def count_pairs_numpy(x: np.ndarray, y: np.ndarray, radius: float) -> int:
    dx = x[:, None] - x[None, :]
    dy = y[:, None] - y[None, :]
    within = (dx * dx + dy * dy) <= radius * radius
    return int(np.count_nonzero(np.triu(within, k=1)))


def lindley_numpy(interarrival: np.ndarray, service: np.ndarray) -> np.ndarray:
    """Queue delays of a FIFO single-server queue, D_{i+1} = max(0, D_i + S_i - A_{i+1})."""
    n = len(service)
    d = np.zeros(n)
    for i in range(1, n):
        v = d[i - 1] + service[i - 1] - interarrival[i]
        d[i] = v if v > 0.0 else 0.0
    return d


# --- numba --------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def adjacency_numba(x, y, active, radius):
        n = x.shape[0]
        r2 = radius * radius
        adj = np.zeros((n, n), dtype=np.bool_)
        for i in range(n):
            if not active[i]:
                continue
            for j in range(i + 1, n):
                if not active[j]:
                    continue
                dx = x[i] - x[j]
                dy = y[i] - y[j]
                if dx * dx + dy * dy <= r2:
                    adj[i, j] = True
                    adj[j, i] = True
        return adj

    @njit(cache=True)
    def count_pairs_numba(x, y, radius):
        n = x.shape[0]
        r2 = radius * radius
        c = 0
        for i in range(n):
            for j in range(i + 1, n):
                dx = x[i] - x[j]
                dy = y[i] - y[j]
                if dx * dx + dy * dy <= r2:
                    c += 1
        return c

    @njit(cache=True)
    def lindley_numba(interarrival, service):
        n = service.shape[0]
        d = np.zeros(n)
        for i in range(1, n):
            v = d[i - 1] + service[i - 1] - interarrival[i]
            d[i] = v if v > 0.0 else 0.0
        return d

    adjacency = adjacency_numba
    _count_pairs = count_pairs_numba
    lindley = lindley_numba
else:
    adjacency = adjacency_numpy
    _count_pairs = count_pairs_numpy
    lindley = lindley_numpy


def count_pairs(x: np.ndarray, y: np.ndarray, radius: float) -> int:
    return int(_count_pairs(x, y, radius))


BACKEND = "numba" if HAVE_NUMBA else "numpy"
