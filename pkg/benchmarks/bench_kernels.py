#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Runs the three hot kernels on representative workloads and prints a table
of native vs fallback timings. The native extension must be built
(``python setup.py build_ext --inplace`` or a normal install); if it is
missing, only the fallback column is reported.

Usage: python benchmarks/bench_kernels.py [--rows N]
"""

import argparse
import pathlib
import sys
import time

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from odtomo._kernels import _pyref  # noqa: E402

try:
    from odtomo._kernels import _native
except ImportError:
    _native = None


def timeit(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench(rows: int):
    rng = np.random.default_rng(0)
    workloads = []

    data4 = np.ascontiguousarray(rng.poisson(5.0, size=(rows, 4)).astype(float))
    data8 = np.ascontiguousarray(rng.poisson(5.0, size=(rows, 8)).astype(float))
    means4 = data4.mean(axis=0)
    workloads.append(("subset_means p=4", lambda m: m.subset_means(data4)))
    workloads.append(("subset_means p=8", lambda m: m.subset_means(data8)))
    workloads.append(
        ("centered_stats p=4", lambda m: m.centered_product_stats(data4, means4))
    )

    out = np.empty(rows, dtype=np.int64)
    workloads.append(("poisson mean=4", lambda m: m.poisson_fill(out, 4.0, 42)))
    workloads.append(("poisson mean=200", lambda m: m.poisson_fill(out, 200.0, 42)))

    print(f"rows = {rows}")
    print(f"{'kernel':<22} {'python':>12} {'native':>12} {'speedup':>9}")
    for name, call in workloads:
        t_py = timeit(call, _pyref)
        if _native is not None:
            t_nat = timeit(call, _native)
            print(f"{name:<22} {t_py * 1e3:>10.2f}ms {t_nat * 1e3:>10.2f}ms {t_py / t_nat:>8.1f}x")
        else:
            print(f"{name:<22} {t_py * 1e3:>10.2f}ms {'-':>12} {'-':>9}")
    if _native is None:
        print("\nnative kernels not built; showing fallback only")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=200_000)
    args = parser.parse_args()
    bench(args.rows)


if __name__ == "__main__":
    main()
