#!/usr/bin/env python3
"""Benchmark the JIT-compiled kernels against the pure-NumPy fallback.

Runs the same workloads through both kernel backends (selected internally,
no environment variable needed) and prints the best-of-N wall time for each,
plus the speedup of the compiled path.  Workloads cover the two hot spots:
alternating-series summation and Monte Carlo path simulation for the three
model families.

Usage:
    python3 benchmarks/benchmark_backends.py [--paths 20000] [--repeats 5]
"""

import argparse
import time

import numpy as np

from expfunc import _backend
from expfunc.levy_model import LevyModel

BROWNIAN = LevyModel.brownian(b=0.0, sigma=4.0)
JUMPY = LevyModel.jump_diffusion(b=1.0, sigma=2.0, lam=3.0, eta=2.0)
STABLE = LevyModel.stable(b=0.0, c=1.0, alpha=1.75)


def shifted_psi_values(model, q, n_terms):
    shifted = model.shift(q)
    k = np.arange(1, n_terms + 1, dtype=np.float64)
    return model.psi_array(k + shifted.shift) - q


def build_workloads(paths):
    psi_vals = shifted_psi_values(BROWNIAN, 2.0, 4096)
    z_grid = np.linspace(0.1, 60.0, 400)

    def series(kern):
        for z in z_grid:
            kern.alt_series_sum(1.0, float(z), psi_vals, 1e-12)

    def brownian(kern):
        kern.simulate_brownian_paths(paths, 0.0, 4.0, 2.0, 1e-3, 0.0, 42)

    def jumpdiff(kern):
        kern.simulate_jumpdiff_paths(paths // 2, 1.0, 2.0, 3.0, 2.0, 2.0,
                                     1e-3, 0.0, 42)

    def stable(kern):
        kern.simulate_stable_paths(paths // 4, 0.0, 1.0, 1.75, 2.0, 1e-3,
                                   0.0, 42)

    return [
        ("alternating series, 400 evals", series),
        (f"brownian paths, n={paths}", brownian),
        (f"jump-diffusion paths, n={paths // 2}", jumpdiff),
        (f"stable paths, n={paths // 4}", stable),
    ]


def best_time(workload, kern, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        workload(kern)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--paths", type=int, default=20_000,
                        help="brownian path count (others scaled down)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="repetitions; best time is reported")
    args = parser.parse_args()

    workloads = build_workloads(args.paths)
    timings = {}
    for backend in ("numba", "numpy"):
        with _backend.override(backend):
            kern = _backend.kernels()
            kern.warm_up()  # JIT compile outside the timed region
            for name, workload in workloads:
                timings[(backend, name)] = best_time(workload, kern,
                                                     args.repeats)

    width = max(len(name) for name, _ in workloads)
    print(f"backend comparison, best of {args.repeats} runs")
    print(f"{'workload':<{width}}  {'numba':>9}  {'numpy':>9}  {'speedup':>8}")
    for name, _ in workloads:
        nb = timings[("numba", name)]
        np_ = timings[("numpy", name)]
        print(f"{name:<{width}}  {nb:>8.4f}s  {np_:>8.4f}s  "
              f"{np_ / nb:>7.1f}x")


if __name__ == "__main__":
    main()
