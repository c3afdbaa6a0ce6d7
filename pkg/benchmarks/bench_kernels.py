"""Compare the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 20]

Each kernel is first checked for identical output, then timed (best of
``repeat``); numba compile time is excluded by a warm-up call.
"""

import argparse
import timeit

import numpy as np

from manetq import _accel


def cases(rng):
    for n in (30, 100, 300):
        x = rng.uniform(0, 1000, n)
        y = rng.uniform(0, 1000, n)
        active = rng.random(n) < 0.9
        yield f"adjacency n={n}", "adjacency", (x, y, active, 250.0)
        yield f"count_pairs n={n}", "count_pairs", (x, y, 500.0)
    for n in (10_000, 200_000):
        yield (f"lindley n={n}", "lindley",
               (rng.exponential(2.0, n), rng.exponential(1.0, n)))


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba unavailable (or MANETQ_NUMBA=0); nothing to compare")
        return
    rng = np.random.default_rng(7)
    print(f"{'kernel':24s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for label, name, a in cases(rng):
        fast = getattr(_accel, f"{name}_numba")
        slow = getattr(_accel, f"{name}_numpy")
        r_fast, r_slow = fast(*a), slow(*a)
        assert np.array_equal(np.asarray(r_fast), np.asarray(r_slow)), label
        number = 1 if name == "lindley" else 20
        t_slow = min(timeit.repeat(lambda: slow(*a), number=number, repeat=args.repeat)) / number
        t_fast = min(timeit.repeat(lambda: fast(*a), number=number, repeat=args.repeat)) / number
        print(f"{label:24s} {t_slow * 1e3:10.3f} {t_fast * 1e3:10.3f} {t_slow / t_fast:8.1f}x")


if __name__ == "__main__":
    main()
