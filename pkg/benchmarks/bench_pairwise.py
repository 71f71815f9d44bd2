"""Benchmark the compiled pairwise kernel against the numpy fallback.

The pairwise mean-field reduction (for every particle, a weighted sum of
a kernel over all ensemble members) is the one O(N^2)-per-step hot loop
in the package; everything else is O(N) vectorized numpy.  Usage:

    python benchmarks/bench_pairwise.py [--sizes 1000,4000,16000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from mfsde import _kernels


def bench(fn, x, y, w, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(x, y, w, 1.3)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="1000,4000,16000")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"active backend: {_kernels.backend_name()}")
    print(f"{'N':>8} {'compiled/active (s)':>20} {'fallback (s)':>14} {'speedup':>8}  max|diff|")
    rng = np.random.default_rng(0)
    for n in sizes:
        x = rng.standard_normal(n)
        y = rng.standard_normal(n)
        w = np.full(n, 1.0 / n)
        t_active, out_a = bench(_kernels.sin_product_mean, x, y, w, args.repeat)
        t_fall, out_f = bench(_kernels.fallback_sin_product_mean, x, y, w, args.repeat)
        diff = float(np.max(np.abs(out_a - out_f)))
        print(f"{n:>8} {t_active:>20.4f} {t_fall:>14.4f} {t_fall / t_active:>8.2f}  {diff:.2e}")


if __name__ == "__main__":
    main()
