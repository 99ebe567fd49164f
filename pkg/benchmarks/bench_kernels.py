#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times every kernel in rankone._kernels on representative workloads and
prints a speedup table. The active backend for normal package use is
selected by the RANKONE_BACKEND environment variable; this script
always runs both implementations side by side.

Usage: python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from rankone import _kernels
from rankone import construction as cons


def time_call(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def build_word_args(K=13):
    params = cons.chacon()
    table = cons.heights(params, K)
    n_st = K - 1
    r_arr = np.array([params.stage(m).r for m in range(1, K)], dtype=np.int64)
    marks = np.arange(1, K, dtype=np.int64)
    s_flat = np.array(
        [x for m in range(1, K) for x in params.stage(m).s], dtype=np.int64
    )
    s_ptr = np.array([3 * t for t in range(n_st)], dtype=np.int64)
    return (table.L(1), r_arr, s_flat, s_ptr, marks, table.L(K))


def workloads():
    rng = np.random.default_rng(0)
    labels = rng.integers(-5, 40, size=2_000_000).astype(np.int64)
    vals = rng.integers(-3, 4, size=1_000_000).astype(np.int64)
    mu = _kernels.IMPLEMENTATIONS["numpy"]["sieve_mobius"](1_000_001)
    checkpoints = np.array([100, 10_000, 1_000_000], dtype=np.int64)
    return [
        ("sieve_mobius(5e6)", "sieve_mobius", (5_000_000,)),
        ("build_word(chacon,K=13)", "build_word", build_word_args()),
        ("pair_counts(2e6,n=37)", "pair_counts", (labels, 37, 40)),
        ("class_counts(2e6)", "class_counts", (labels, 40)),
        ("weighted_mobius_sums(1e6)", "weighted_mobius_sums",
         (vals, mu, checkpoints)),
        ("strided_mobius_sum(1e6,d=3)", "strided_mobius_sum",
         (vals, mu, 3, 333_333)),
    ]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = sorted(_kernels.IMPLEMENTATIONS)
    if "numba" in backends:
        # compile outside the timed region
        for label, name, call_args in workloads():
            _kernels.IMPLEMENTATIONS["numba"][name](*call_args)

    print(f"{'kernel':<30} " + " ".join(f"{b:>12}" for b in backends)
          + f" {'speedup':>9}")
    for label, name, call_args in workloads():
        times = {
            b: time_call(_kernels.IMPLEMENTATIONS[b][name], *call_args,
                         repeat=args.repeat)
            for b in backends
        }
        cols = " ".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends)
        if "numba" in times and "numpy" in times:
            ratio = times["numpy"] / times["numba"] if times["numba"] > 0 else 0
            print(f"{label:<30} {cols} {ratio:>8.2f}x")
        else:
            print(f"{label:<30} {cols}")
    print(f"\nactive backend for package use: {_kernels.BACKEND} "
          f"(override with RANKONE_BACKEND=numpy|numba)")


if __name__ == "__main__":
    main()
