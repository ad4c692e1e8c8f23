"""Timing comparison of the numba kernels against the numpy fallback.

Run as ``python benchmarks/bench_kernels.py``.  The same workloads drive
both backends, so the table directly answers whether carrying the numba
dependency pays for itself on this machine.  A final informational row
times the transform-based sampler against direct synthesis through the
public API.
"""

import argparse
import time

import numpy as np

from specgauss import _kernels
from specgauss import build_fbm, fbm_coefficients, sample_paths, sample_paths_fast


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_panel(repeats):
    n = 20000
    edges = 0.01 + np.pi * np.arange(n + 1)
    lo, hi = edges[:-1], edges[1:]
    x, w = np.polynomial.legendre.leggauss(12)
    a = -0.4
    args = (a, lo, hi, x, w)
    rows = [("panel_cos_power", "numpy",
             best_of(lambda: _kernels.panel_cos_power_numpy(*args), repeats))]
    if _kernels.HAVE_NUMBA:
        _kernels.panel_cos_power_numba(*args)  # compile outside the clock
        rows.append(("panel_cos_power", "numba",
                     best_of(lambda: _kernels.panel_cos_power_numba(*args), repeats)))
    return rows


def bench_synth(repeats):
    rng = np.random.default_rng(2)
    n_paths, n_terms, m = 64, 1024, 1025
    z_sin = rng.standard_normal((n_paths, n_terms))
    z_cos = rng.standard_normal((n_paths, n_terms))
    k = np.arange(1, n_terms + 1, dtype=float)
    amp = k**-1.3
    tgrid = np.linspace(0.0, 1.0, m)
    args = (z_sin, z_cos, amp, amp, np.pi, tgrid, True)
    rows = [("synth_direct", "numpy",
             best_of(lambda: _kernels.synth_direct_numpy(*args), repeats))]
    if _kernels.HAVE_NUMBA:
        _kernels.synth_direct_numba(*args)
        rows.append(("synth_direct", "numba",
                     best_of(lambda: _kernels.synth_direct_numba(*args), repeats)))
    return rows


def bench_samplers(repeats):
    n = 1024
    exp = build_fbm(0.3, 1.0, n, fbm_coefficients(0.3, 1.0, n))
    grid = np.linspace(0.0, 1.0, n + 1)
    sample_paths_fast(exp, n, 8, 7)  # warm caches
    return [
        ("sample_paths (direct)", "library",
         best_of(lambda: sample_paths(exp, grid, 64, 7), repeats)),
        ("sample_paths_fast", "library",
         best_of(lambda: sample_paths_fast(exp, n, 64, 7), repeats)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5, help="best-of count")
    opts = ap.parse_args()

    print(f"numba available: {_kernels.HAVE_NUMBA}   "
          f"active backend: {'numba' if _kernels.USE_NUMBA else 'numpy'}")
    print(f"{'workload':24s} {'backend':8s} {'best ms':>10s} {'speedup':>9s}")
    for group in (bench_panel(opts.repeats), bench_synth(opts.repeats),
                  bench_samplers(opts.repeats)):
        base = group[0][2]
        for name, backend, t in group:
            print(f"{name:24s} {backend:8s} {t * 1e3:10.2f} {base / t:8.1f}x")


if __name__ == "__main__":
    main()
