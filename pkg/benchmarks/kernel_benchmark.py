"""Compare the compiled trajectory kernels against the numpy fallback.

Runs the same workloads through both backends and reports kick rates.  The
histogram workload mirrors the classical area pipeline; the final-momenta
workload mirrors the diffusion estimate.

Usage: python3 benchmarks/kernel_benchmark.py [--n-traj 64] [--n-kicks 200000]
"""

import argparse
import time

import numpy as np

from kamrotor import _kernels
from kamrotor._kernels import _fallback

try:
    from kamrotor._kernels import _compiled
except ImportError:
    _compiled = None


def bench_histogram(mod, x0, p0, n_kicks, kick, n_cells):
    counts = np.zeros((len(x0), n_cells * n_cells), dtype=np.int64)
    t0 = time.perf_counter()
    mod.torus_histogram(x0, p0, n_kicks, kick, n_cells, counts)
    return time.perf_counter() - t0, counts


def bench_momenta(mod, x0, p0, n_kicks, strength):
    t0 = time.perf_counter()
    out = mod.final_momenta(x0, p0, n_kicks, strength)
    return time.perf_counter() - t0, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-traj", type=int, default=64)
    ap.add_argument("--n-kicks", type=int, default=200_000)
    ap.add_argument("--n-cells", type=int, default=100)
    ap.add_argument("--K", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    x0 = rng.random(args.n_traj)
    p0 = rng.random(args.n_traj)
    kick = args.K / (2.0 * np.pi)
    total = args.n_traj * args.n_kicks

    print(f"active backend: {_kernels.BACKEND}")
    backends = [("fallback", _fallback)]
    if _compiled is not None:
        backends.insert(0, ("compiled", _compiled))
    else:
        print("compiled extension not available; fallback only")

    results = {}
    for name, mod in backends:
        t_hist, counts = bench_histogram(mod, x0, p0, args.n_kicks, kick,
                                         args.n_cells)
        t_mom, moms = bench_momenta(mod, x0, p0, args.n_kicks, args.K)
        results[name] = (t_hist, t_mom, counts, moms)
        print(f"{name:9s} histogram: {t_hist:7.3f} s ({total / t_hist:.2e} kicks/s)"
              f"   final momenta: {t_mom:7.3f} s ({total / t_mom:.2e} kicks/s)")

    if len(results) == 2:
        th_c, tm_c, counts_c, moms_c = results["compiled"]
        th_f, tm_f, counts_f, moms_f = results["fallback"]
        print(f"speedup: histogram {th_f / th_c:.1f}x, momenta {tm_f / tm_c:.1f}x")
        same_hist = np.array_equal(counts_c, counts_f)
        mom_gap = float(np.max(np.abs(moms_c - moms_f)))
        print(f"agreement: histograms identical={same_hist}, "
              f"max |momentum gap|={mom_gap:.3e}")


if __name__ == "__main__":
    main()
