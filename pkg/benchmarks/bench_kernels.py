#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-NumPy fallback.

Run:  python3 benchmarks/bench_kernels.py [--draws N] [--paths N] [--nodes N]
"""

import argparse
import time

import numpy as np

from fringearray._kernels import _fallback

try:
    from fringearray._kernels import _core
except ImportError:
    _core = None


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, out


def bench_inverse_cdf(n_draws, rng):
    x = np.linspace(-8.0, 8.0, 2049)
    pdf = np.exp(-(x**2) / 2) * (1 + np.cos(10 * x))
    cell = 0.5 * (pdf[:-1] + pdf[1:]) * np.diff(x)
    cdf = np.concatenate([[0.0], np.cumsum(cell)])
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    u = rng.random(n_draws)
    t_py, out_py = timeit(_fallback.inverse_cdf, u, x, cdf)
    row = [("inverse_cdf", f"{n_draws:.0e} draws", t_py, None, True)]
    if _core is not None:
        t_c, out_c = timeit(_core.inverse_cdf, u, x, cdf)
        row = [("inverse_cdf", f"{n_draws:.0e} draws", t_py, t_c,
                bool(np.array_equal(out_py, out_c)))]
    return row


def bench_ou_paths(n_paths, n_nodes, rng):
    z = rng.standard_normal((n_paths, n_nodes))
    t_py, out_py = timeit(_fallback.ou_paths, z, 0.98, 1.0)
    row = [("ou_paths", f"{n_paths}x{n_nodes}", t_py, None, True)]
    if _core is not None:
        t_c, out_c = timeit(_core.ou_paths, z, 0.98, 1.0)
        row = [("ou_paths", f"{n_paths}x{n_nodes}", t_py, t_c,
                bool(np.array_equal(out_py, out_c)))]
    return row


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--draws", type=int, default=5_000_000)
    parser.add_argument("--paths", type=int, default=20_000)
    parser.add_argument("--nodes", type=int, default=512)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    rows = bench_inverse_cdf(args.draws, rng) + bench_ou_paths(
        args.paths, args.nodes, rng
    )

    print(f"{'kernel':<14}{'workload':<16}{'python':>10}{'compiled':>10}"
          f"{'speedup':>9}  bit-identical")
    for name, load, t_py, t_c, same in rows:
        if t_c is None:
            print(f"{name:<14}{load:<16}{t_py*1e3:>9.1f}ms{'n/a':>10}{'':>9}  "
                  "(extension not built)")
        else:
            print(f"{name:<14}{load:<16}{t_py*1e3:>9.1f}ms{t_c*1e3:>8.1f}ms"
                  f"{t_py/t_c:>8.2f}x  {same}")


if __name__ == "__main__":
    main()
