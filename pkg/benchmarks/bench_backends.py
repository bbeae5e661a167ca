"""Benchmark the two dual-ascent backends against each other.

Runs the box-constrained dual ascent kernel for a fixed number of
iterations (no early stopping) on realistic impulsive-noise instances and
reports wall time per backend plus the numba/numpy speedup.  The numba
backend is warmed up first so JIT compilation is not charged to the
measurement.

Usage::

    python3 benchmarks/bench_backends.py --sizes 50,100,200,400 --iters 2000
"""

import argparse
import time

import numpy as np

from imptik._accel import get_impl
from imptik.mesh import make_grid
from imptik.operators import assemble


def make_instance(n, seed):
    rng = np.random.default_rng(seed)
    grid = make_grid(n)
    T = assemble(grid)
    g = np.sin(np.pi * grid.points) / np.pi**2
    spikes = rng.choice(n, size=max(1, n // 20), replace=False)
    g[spikes] += rng.choice([-1.0, 1.0], size=spikes.size)
    S = (1.05 * T.norm_bound) ** 2
    return T.gram, g, S


def time_backend(impl, B, g, alpha, S, iters, repeats):
    p0 = np.zeros(g.shape[0])
    best = np.inf
    dual = np.nan
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = impl(B, g, alpha, S, 0.0, iters, p0)
        best = min(best, time.perf_counter() - t0)
        dual = out[5]
    return best, dual


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="50,100,200,400",
                        help="comma-separated grid sizes")
    parser.add_argument("--iters", type=int, default=2000,
                        help="fixed iteration count per run")
    parser.add_argument("--repeats", type=int, default=3,
                        help="repetitions per measurement (best is kept)")
    parser.add_argument("--alpha", type=float, default=0.1)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]

    impls = {name: get_impl(name) for name in ("numba", "numpy")}

    # Warm up the JIT on a small instance before timing anything.
    B, g, S = make_instance(16, args.seed)
    impls["numba"](B, g, args.alpha, S, 0.0, 5, np.zeros(16))

    print(f"box-constrained dual ascent kernel, {args.iters} iterations, "
          f"best of {args.repeats}")
    print(f"{'n':>6} {'numba [s]':>11} {'numpy [s]':>11} {'speedup':>9} "
          f"{'numba iters/s':>14}")
    for n in sizes:
        B, g, S = make_instance(n, args.seed)
        times = {}
        for name, impl in impls.items():
            times[name], dual = time_backend(
                impl, B, g, args.alpha, S, args.iters, args.repeats
            )
        speedup = times["numpy"] / times["numba"]
        rate = args.iters / times["numba"]
        print(f"{n:>6} {times['numba']:>11.4f} {times['numpy']:>11.4f} "
              f"{speedup:>8.2f}x {rate:>14.0f}")


if __name__ == "__main__":
    main()
