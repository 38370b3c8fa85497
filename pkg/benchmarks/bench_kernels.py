"""Compare the compiled kernels with the numpy fallback.

Usage: ``python benchmarks/bench_kernels.py [--n 2000] [--repeat 3]``.
"""
import argparse
import time

import numpy as np

from helio2d._backend import load
from helio2d.curve import ClosedCurve, sample


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000, help="boundary nodes")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = {"cython": load("cython"), "python": load("python")}
    bnd = sample(ClosedCurve.star(n=64), args.n)
    x, y = np.ascontiguousarray(bnd.nodes.T)
    nx, ny = np.ascontiguousarray(bnd.normals.T)
    k, cs, cd, csp = 8.0, -8j, 1.0 + 0j, 0j
    z = np.random.default_rng(0).uniform(1e-3, 200.0, args.n * args.n // 4)

    cases = {
        "bessel01": lambda m: m.bessel01(z),
        "kernel_block": lambda m: m.kernel_block(k, x, y, nx, ny, x, y, nx, ny, cs, cd, csp),
        "kernel_square_t": lambda m: m.kernel_square_t(
            k, x, y, nx, ny, cs, cd, csp, np.empty((args.n, args.n), complex)),
    }
    print(f"{'kernel':<16}{'cython [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, fn in cases.items():
        t = {b: best_of(lambda: fn(m), args.repeat) for b, m in backends.items()}
        print(f"{name:<16}{t['cython']:>12.4f}{t['python']:>12.4f}{t['python'] / t['cython']:>10.1f}")


if __name__ == "__main__":
    main()
