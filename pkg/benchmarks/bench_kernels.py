"""Benchmark the hot kernels on both backends.

Run ``python3 benchmarks/bench_kernels.py`` (add ``--quick`` for a faster
pass). Compares the numba and pure-numpy implementations of the sup scans
(brute and hull) and of the batched running-sup over simulated driver paths,
and checks that both backends agree while timing them.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from gradcp.kernels import numba_backend, numpy_backend


def timeit(fn, *args, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_sup_scans(sizes, rng):
    print(f"{'kernel':<16}{'n':>8}{'numpy':>12}{'numba':>12}{'speedup':>10}   max|diff|")
    for n in sizes:
        x = rng.standard_normal(n)
        sn = np.concatenate(([0.0], np.cumsum(x))) / n
        pos = np.arange(n + 1, dtype=np.float64)
        eval_idx = np.arange(1, n + 1, dtype=np.int64)
        for name in ("sup_scan_brute", "sup_scan_hull"):
            t_np, (v_np, _) = timeit(getattr(numpy_backend, name), sn, pos, eval_idx)
            if numba_backend is not None:
                t_nb, (v_nb, _) = timeit(getattr(numba_backend, name), sn, pos, eval_idx)
                diff = float(np.max(np.abs(v_np - v_nb)))
                print(f"{name:<16}{n:>8}{t_np * 1e3:>10.2f}ms{t_nb * 1e3:>10.2f}ms"
                      f"{t_np / t_nb:>9.1f}x   {diff:.2e}")
            else:
                print(f"{name:<16}{n:>8}{t_np * 1e3:>10.2f}ms{'-':>12}{'-':>10}")


def bench_hmax(n_draws, m, rng):
    print(f"\nhmax_batch: {n_draws} draws, grid {m}")
    g = np.zeros((n_draws, 1, m + 1))
    g[:, :, 1:] = np.cumsum(rng.standard_normal((n_draws, 1, m)), axis=2) / np.sqrt(m)
    pos = np.arange(m + 1, dtype=np.float64)
    t_np, h_np = timeit(numpy_backend.hmax_batch, g, pos, repeats=2)
    print(f"  numpy (vectorized brute): {t_np * 1e3:9.1f} ms")
    if numba_backend is not None:
        numba_backend.hmax_batch(g[:2], pos)  # warm the JIT
        t_nb, h_nb = timeit(numba_backend.hmax_batch, g, pos, repeats=2)
        diff = float(np.max(np.abs(h_np - h_nb)))
        print(f"  numba (parallel hull):    {t_nb * 1e3:9.1f} ms   "
              f"speedup {t_np / t_nb:.1f}x   max|diff| {diff:.2e}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller sizes")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    if numba_backend is None:
        print("numba backend unavailable (GRADCP_NUMBA=0 or numba missing); timing numpy only\n")
    else:
        # warm the JIT outside the timed region
        sn = np.array([0.0, 0.1, 0.3])
        pos = np.arange(3, dtype=np.float64)
        idx = np.array([1, 2], dtype=np.int64)
        numba_backend.sup_scan_brute(sn, pos, idx)
        numba_backend.sup_scan_hull(sn, pos, idx)

    sizes = (512, 2048) if args.quick else (512, 4096, 16384)
    bench_sup_scans(sizes, rng)
    if args.quick:
        bench_hmax(200, 256, rng)
    else:
        bench_hmax(2000, 512, rng)


if __name__ == "__main__":
    main()
