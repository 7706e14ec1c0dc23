#!/usr/bin/env python3
"""Benchmark the numba hot kernels against their pure-numpy fallbacks.

Two kernel families are timed:
  1. batched quadratic nonlinearity evaluation (values + gradients)
  2. direct circular convolution (the small-grid oracle)

Usage:
    python benchmarks/bench_kernels.py [--points P ...] [--repeats R]

The numpy path is always available; the numba rows appear only when numba
imports (set NLRD_DISABLE_NUMBA=1 to force the fallback inside the package
itself).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from nlrd import _kernels


def time_call(fn, *args, repeats: int) -> float:
    fn(*args)  # warmup: first numba call compiles
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_quadratic(points: int, n_components: int, repeats: int, rows: list) -> None:
    rng = np.random.default_rng(0)
    z = rng.standard_normal((points, n_components))
    mats = rng.standard_normal((n_components, n_components, n_components))
    mats = 0.5 * (mats + np.transpose(mats, (0, 2, 1)))

    t_np = time_call(_kernels.quadratic_values_numpy, z, mats, repeats=repeats)
    t_g_np = time_call(_kernels.quadratic_gradients_numpy, z, mats, repeats=repeats)
    if _kernels.NUMBA_AVAILABLE:
        ref = _kernels.quadratic_values_numpy(z, mats)
        got = _kernels.quadratic_values_numba(z, mats)
        assert np.allclose(ref, got, atol=1e-12), "quadratic paths disagree"
        t_nb = time_call(_kernels.quadratic_values_numba, z, mats, repeats=repeats)
        t_g_nb = time_call(_kernels.quadratic_gradients_numba, z, mats, repeats=repeats)
    else:
        t_nb = t_g_nb = None
    rows.append((f"quadratic values  P={points:>8}", t_np, t_nb))
    rows.append((f"quadratic grads   P={points:>8}", t_g_np, t_g_nb))


def bench_convolution(n: int, d: int, repeats: int, rows: list) -> None:
    rng = np.random.default_rng(1)
    shape = (n,) * d
    h = rng.standard_normal(shape)
    g = rng.standard_normal(shape)

    t_np = time_call(_kernels.circular_convolve_numpy, h, g, repeats=repeats)
    if _kernels.NUMBA_AVAILABLE:
        ref = _kernels.circular_convolve_numpy(h, g)
        got = _kernels.circular_convolve_numba(h, g)
        assert np.allclose(ref, got, atol=1e-10), "convolution paths disagree"
        t_nb = time_call(_kernels.circular_convolve_numba, h, g, repeats=repeats)
    else:
        t_nb = None
    rows.append((f"direct convolution {n}^{d}", t_np, t_nb))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--points", type=int, nargs="+", default=[10_000, 100_000, 1_000_000],
        help="batch sizes for the quadratic kernels",
    )
    parser.add_argument(
        "--components", type=int, default=4, help="number of system components"
    )
    parser.add_argument(
        "--grids", type=int, nargs="+", default=[8, 10],
        help="lattice sizes n for the 2-d direct convolution",
    )
    parser.add_argument("--repeats", type=int, default=5, help="timing repeats")
    args = parser.parse_args()

    print(f"active backend: {_kernels.backend()}")
    if not _kernels.NUMBA_AVAILABLE:
        print("numba unavailable; timing the numpy fallback only")

    rows: list[tuple[str, float, float | None]] = []
    for points in args.points:
        bench_quadratic(points, args.components, args.repeats, rows)
    for n in args.grids:
        bench_convolution(n, 2, args.repeats, rows)

    width = max(len(r[0]) for r in rows)
    print(f"\n{'kernel':<{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}")
    for label, t_np, t_nb in rows:
        if t_nb is None:
            print(f"{label:<{width}}  {t_np * 1e3:>8.3f}ms  {'-':>10}  {'-':>8}")
        else:
            print(
                f"{label:<{width}}  {t_np * 1e3:>8.3f}ms  {t_nb * 1e3:>8.3f}ms"
                f"  {t_np / t_nb:>7.2f}x"
            )


if __name__ == "__main__":
    main()
