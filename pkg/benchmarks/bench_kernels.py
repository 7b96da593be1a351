#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

The two backends implement identical algorithms (same pivoting, same
recursion seeding), so the comparison is pure implementation overhead.
"""

import argparse
import time

import numpy as np

from latscat._kernels import available_backends


def _timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(sorted(backends))}")
    rng = np.random.default_rng(0)

    cases = []

    for n in (41, 161, 321):
        # scaled so the determinant stays inside double range
        a = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(n)
        cases.append((f"lu_det {n}x{n}", lambda mod, a=a: mod.lu_det(a)))
        rhs = np.eye(n, dtype=complex)
        cases.append((f"lu_solve {n}x{n} (inverse)",
                      lambda mod, a=a, rhs=rhs: mod.lu_solve(a, rhs)))

    z = 0.4 + 0.3j
    k = (z - np.sqrt(z * z - 4.0 + 0j)) / 2.0
    k = k if abs(k) < 1 else 1.0 / k
    v4096 = rng.uniform(-0.2, 0.2, 4096)
    cases.append(("jost_backward N=4096",
                  lambda mod: mod.jost_backward(v4096, z, k, 4096)))

    zs = np.linspace(-1.8, 1.8, 257).astype(complex)
    ks = np.array([(zz - np.sqrt(zz * zz - 4.0 + 0j)) / 2.0 for zz in zs])
    ks = np.where(np.abs(ks) <= 1.0, ks, 1.0 / ks)
    cases.append(("jost_x0_grid 257 pts, N=4096",
                  lambda mod: mod.jost_x0_grid(v4096, zs, ks, 4096)))

    vbig = rng.uniform(-0.2, 0.2, 400_000)
    cases.append(("mfun_e1 dim=4e5",
                  lambda mod: mod.mfun_e1(vbig, 0.5 + 1e-4j)))

    width = max(len(name) for name, _ in cases)
    header = f"{'kernel':<{width}}  " + "  ".join(f"{b:>10}" for b in sorted(backends))
    if len(backends) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    for name, fn in cases:
        times = {b: _timeit(lambda m=mod: fn(m), args.repeat)
                 for b, mod in backends.items()}
        row = f"{name:<{width}}  " + "  ".join(
            f"{times[b] * 1e3:>8.2f}ms" for b in sorted(backends))
        if len(times) == 2:
            row += f"  {times['purepy'] / times['cython']:>7.1f}x"
        print(row)


if __name__ == "__main__":
    main()
