"""Compiled vs pure-Python kernels: policy replay, grid search and full fits.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-``repeat`` wall time per case and backend, and the
speed-up. Results must agree exactly; a mismatch aborts the run.
"""
import argparse
import sys
import time

import numpy as np

from cashfit import CostStructure, gen_random_walk
from cashfit._kernels import get_backend
from cashfit.solver import fit_bounds
from cashfit.solver.oracle import grid_levels

ALPHA = CostStructure(2.0e-5, 2.0e-5, 1.0e-4, 1.0e-4, 2.0e-4)


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    flows = np.asarray(gen_random_walk(0.097, 0.009, 100_000, 0).flows)
    yield "simulate_cost N=100000", lambda k: k.simulate_cost(
        flows, 0.57, 0.485, 0.574, 0.752, ALPHA.gamma0_plus, ALPHA.gamma0_minus,
        ALPHA.gamma1_plus, ALPHA.gamma1_minus, ALPHA.v, 0.485, 1e-7)

    small = np.random.default_rng(1).integers(-5, 6, 10).astype(float)
    levels = grid_levels(0.0, 30.0, 0.25)
    yield f"grid_search N=10 G={len(levels)}", lambda k: k.grid_search(
        small, 5.0, levels, 2e-3, 2e-3, 1e-4, 1e-4, 2e-4, 0.0, 0.0)

    for n in (15, 20):
        f = gen_random_walk(0.097, 0.009, n, 3)
        yield f"fit_bounds n={n}", lambda k, f=f: fit_bounds(f, 0.57, ALPHA, 0.485, backend=k)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    py = get_backend("python")
    try:
        cy = get_backend("compiled")
    except ImportError:
        print("compiled kernels are not built; nothing to compare", file=sys.stderr)
        return 1
    print(f"{'case':<28}{'python s':>12}{'compiled s':>12}{'speed-up':>10}")
    for name, run in cases():
        t_py, r_py = best_of(lambda: run(py), args.repeat)
        t_cy, r_cy = best_of(lambda: run(cy), args.repeat)
        if r_py != r_cy:
            print(f"{name}: backends disagree: {r_py!r} != {r_cy!r}", file=sys.stderr)
            return 2
        print(f"{name:<28}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
