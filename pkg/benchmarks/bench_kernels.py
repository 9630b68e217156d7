"""Benchmark the compiled kernels against the pure-NumPy fallback.

Usage: python benchmarks/bench_kernels.py [repeats]

Times the two hot kernels (loess smoothing, rolling quartiles) and the full
decomposition they drive, at several series lengths. The fallback is imported
directly so no environment variable juggling is needed.
"""

from __future__ import annotations

import sys
import time

import numpy as np

from tsbench._kernels import IMPLEMENTATION, fallback

try:
    from tsbench._kernels import _native
except ImportError:
    _native = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_pair(name, make_args, native_fn, fallback_fn, repeats):
    args = make_args()
    t_fb = timeit(lambda: fallback_fn(*args), repeats)
    if native_fn is None:
        print(f"{name:<44} fallback {t_fb * 1e3:8.2f} ms   native      n/a")
        return
    t_nat = timeit(lambda: native_fn(*args), repeats)
    print(
        f"{name:<44} fallback {t_fb * 1e3:8.2f} ms   native {t_nat * 1e3:8.2f} ms   "
        f"speedup {t_fb / t_nat:6.1f}x"
    )


def main():
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 3
    rng = np.random.default_rng(0)
    print(f"selected implementation at import: {IMPLEMENTATION}")
    if _native is None:
        print("compiled extension unavailable; timing the fallback only")
    print()

    for n in (1_000, 10_000, 50_000):
        y = rng.normal(size=n).cumsum()
        for window in (37, 433):
            bench_pair(
                f"loess_regular n={n} q={window} deg=1",
                lambda y=y, w=window: (y, w, 1, None, 0),
                _native.loess_regular if _native else None,
                fallback.loess_regular,
                repeats,
            )
        bench_pair(
            f"rolling_quartiles n={n} w=51",
            lambda y=y: (y, 51),
            _native.rolling_quartiles if _native else None,
            fallback.rolling_quartiles,
            repeats,
        )
        bench_pair(
            f"rolling_quartiles n={n} w=577",
            lambda y=y: (y, 577),
            _native.rolling_quartiles if _native else None,
            fallback.rolling_quartiles,
            repeats,
        )
        print()

    # end-to-end decomposition through the selected kernel stack
    from tsbench.stl import stl_decompose

    for n in (2_400, 20_000):
        x = np.sin(2 * np.pi * np.arange(n) / 24) + 0.1 * rng.normal(size=n)
        t = timeit(lambda: stl_decompose(x, 24), repeats)
        print(f"stl_decompose n={n} m=24 ({IMPLEMENTATION:>7})        {t * 1e3:8.2f} ms")


if __name__ == "__main__":
    main()
