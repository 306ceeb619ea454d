#!/usr/bin/env python3
"""Benchmark the hot kernels: numba JIT path against the pure-numpy fallback.

Sizes mirror the solver's per-iteration workload: a large batch of lifted
spectra at the box-solver shape (n = 4, lifted size 6) and at the widest
verification shape (n = 6, m = 3, lifted size 20).

Run:  python3 benchmarks/bench_kernels.py [--batch 200000] [--repeat 5]
"""

import argparse
import itertools
import time

import numpy as np

from sumhess import _kernels


def time_call(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def tuple_table(n, m):
    return np.array(list(itertools.combinations(range(n), m)), dtype=np.int64)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if "numba" not in _kernels.IMPLEMENTATIONS:
        print("numba backend unavailable; only the numpy path will run")

    rng = np.random.default_rng(0)
    shapes = [("n=4 m=2 (lift size 6)", 4, 2, 2), ("n=6 m=3 (lift size 20)", 6, 3, 4)]
    print(f"batch = {args.batch}, best of {args.repeat} runs, times in ms")
    header = f"{'kernel':<44}" + "".join(
        f"{name:>12}" for name in _kernels.IMPLEMENTATIONS
    )
    if len(_kernels.IMPLEMENTATIONS) == 2:
        header += f"{'speedup':>10}"
    print(header)

    for label, n, m, k in shapes:
        idx = tuple_table(n, m)
        size = idx.shape[0]
        mu = np.ascontiguousarray(rng.normal(0.5, 1.0, size=(args.batch, n)))
        lam = np.ascontiguousarray(rng.normal(0.5, 1.0, size=(args.batch, size)))
        grads = np.ascontiguousarray(rng.normal(size=(args.batch, size)))
        cases = [
            ("subset_sums", (mu, idx)),
            ("elem_sym_all", (lam, k)),
            ("deleted_sym", (lam, k - 1)),
            ("fold_tuple_gradient", (grads, idx, n)),
        ]
        for name, call_args in cases:
            times = {}
            for backend, impl in _kernels.IMPLEMENTATIONS.items():
                impl[name](*call_args)  # warm the JIT before timing
                times[backend] = time_call(impl[name], *call_args, repeat=args.repeat)
            row = f"{name + '  ' + label:<44}"
            for backend in _kernels.IMPLEMENTATIONS:
                row += f"{times[backend] * 1e3:>12.2f}"
            if len(times) == 2:
                row += f"{times['numpy'] / times['numba']:>9.1f}x"
            print(row)


if __name__ == "__main__":
    main()
