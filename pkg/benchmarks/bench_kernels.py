"""Benchmark the compiled kernels against the numpy fallback.

Times the three irregular hot loops (ragged MaxSim scoring, greedy
dedup scan, pairwise silhouette accumulation) on synthetic workloads.
Run after building the extension:

    python benchmarks/bench_kernels.py [--scale 1.0] [--repeats 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from biaslens._kernels import _numpy_impl

try:
    from biaslens._kernels import _fast
except ImportError:
    _fast = None


def _time(fn, *args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_maxsim(scale: float, repeats: int):
    rng = np.random.default_rng(0)
    n_candidates = int(2000 * scale)
    dim = 128
    query = rng.normal(size=(16, dim)).astype(np.float32)
    sizes = rng.integers(4, 32, size=n_candidates)
    flat = rng.normal(size=(int(sizes.sum()), dim)).astype(np.float32)
    offsets = np.zeros(n_candidates + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    args = (np.ascontiguousarray(query), np.ascontiguousarray(flat), offsets)
    return ("maxsim 16 tokens x %d ragged candidates" % n_candidates,
            _time(_numpy_impl.maxsim_scores, *args, repeats=repeats),
            _time(_fast.maxsim_scores, *args, repeats=repeats) if _fast else None)


def bench_dedup(scale: float, repeats: int):
    rng = np.random.default_rng(1)
    n = int(3000 * scale)
    vectors = rng.normal(size=(n, 64))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    vectors[n // 2:] = vectors[: n - n // 2]  # plant duplicates
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    return ("greedy dedup over %d vectors" % n,
            _time(_numpy_impl.greedy_dedup, vectors, 0.92, repeats=repeats),
            _time(_fast.greedy_dedup, vectors, 0.92, repeats=repeats) if _fast else None)


def bench_silhouette(scale: float, repeats: int):
    rng = np.random.default_rng(2)
    n = int(1500 * scale)
    points = np.ascontiguousarray(rng.normal(size=(n, 32)))
    labels = np.ascontiguousarray(rng.integers(0, 8, size=n), dtype=np.int64)
    return ("silhouette sums over %d points" % n,
            _time(_numpy_impl.silhouette_sums, points, labels, 8, False, repeats=repeats),
            _time(_fast.silhouette_sums, points, labels, 8, False, repeats=repeats)
            if _fast else None)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scale", type=float, default=1.0,
                        help="workload size multiplier")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if _fast is None:
        print("compiled kernels unavailable; timing the numpy fallback only")
    print(f"{'workload':<48} {'numpy':>10} {'cython':>10} {'speedup':>9}")
    for bench in (bench_maxsim, bench_dedup, bench_silhouette):
        name, numpy_time, fast_time = bench(args.scale, args.repeats)
        if fast_time is None:
            print(f"{name:<48} {numpy_time:>9.3f}s {'-':>10} {'-':>9}")
        else:
            print(f"{name:<48} {numpy_time:>9.3f}s {fast_time:>9.3f}s "
                  f"{numpy_time / fast_time:>8.1f}x")


if __name__ == "__main__":
    main()
