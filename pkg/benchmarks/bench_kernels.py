#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the two hot loops (running-sum distance curve, batch normalized RMSD)
on synthetic month matrices of increasing size and prints a table with the
speedup of the compiled path.

Usage: python benchmarks/bench_kernels.py [--sizes 100000,1000000] [--repeats 5]
"""

import argparse
import time

import numpy as np

from retail_profiler import _kernels_py

try:
    from retail_profiler import _kernels as _compiled
except ImportError:
    _compiled = None


def median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def bench(n, repeats):
    rng = np.random.default_rng(0)
    raw = np.ascontiguousarray(rng.uniform(1.0, 500.0, size=(n, 12)))
    target = np.ascontiguousarray(rng.uniform(0.6, 1.4, 12))
    target /= target.mean()
    out = np.empty(n)

    rows = []
    for label, kernel in (
        ("accumulate_distance_curve", "accumulate_distance_curve"),
        ("normalized_rmsd_single", "normalized_rmsd_single"),
    ):
        t_py = median_time(lambda: getattr(_kernels_py, kernel)(raw, target, out), repeats)
        if _compiled is not None:
            t_cy = median_time(lambda: getattr(_compiled, kernel)(raw, target, out), repeats)
            rows.append((label, n, t_py, t_cy, t_py / t_cy))
        else:
            rows.append((label, n, t_py, None, None))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="100000,1000000",
                        help="comma-separated row counts")
    parser.add_argument("--repeats", type=int, default=5, help="runs per timing (median)")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if _compiled is None:
        print("compiled kernels unavailable; timing the numpy fallback only")
    header = f"{'kernel':<28}{'rows':>10}{'numpy (ms)':>14}{'cython (ms)':>14}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for n in sizes:
        for label, rows, t_py, t_cy, speedup in bench(n, args.repeats):
            cy = f"{t_cy * 1e3:14.2f}" if t_cy is not None else f"{'-':>14}"
            sp = f"{speedup:10.2f}" if speedup is not None else f"{'-':>10}"
            print(f"{label:<28}{rows:>10}{t_py * 1e3:14.2f}{cy}{sp}")


if __name__ == "__main__":
    main()
