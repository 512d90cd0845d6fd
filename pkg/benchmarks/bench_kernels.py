"""Compare the compiled kernel backend against the numpy fallback.

Runs the fused per-iteration kernels and a short full solver loop with
both backends and reports wall-clock timings.  The two backends are
required to produce bit-identical results; this script asserts that on
the kernel outputs before timing.

Usage: python benchmarks/bench_kernels.py [--dim 50] [--iters 20000]
"""

import argparse
import importlib
import os
import subprocess
import sys
import time

import numpy as np


def _bench_kernels(mod, dim, iters, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.2, 0.8, dim)
    g = rng.standard_normal(dim)
    lower = np.zeros(dim)
    upper = np.ones(dim)
    w_prev = np.full(dim, 0.01)
    d = np.empty(dim)
    w = np.empty(dim)
    delta = np.empty(dim)
    s_l = np.empty(dim)
    t0 = time.perf_counter()
    for _ in range(iters):
        mod.first_order(x, g, lower, upper, w_prev, d, w, delta, s_l)
    elapsed = time.perf_counter() - t0
    return elapsed, (d.copy(), w.copy(), delta.copy(), s_l.copy())


def _bench_solver(dim, horizon):
    from adagb2 import (CurvatureSpec, Gaussian, SolverParams,
                        make_test_problem, run)

    prob = make_test_problem("boxed_quadratic", dim, 0)
    t0 = time.perf_counter()
    run(prob, Gaussian(0.1), CurvatureSpec("zero"), SolverParams(),
        horizon, base_seed=0)
    return time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dim", type=int, default=50)
    ap.add_argument("--iters", type=int, default=20000)
    ap.add_argument("--horizon", type=int, default=20000)
    ap.add_argument("--inner", action="store_true",
                    help="run the measurement in this process (internal)")
    args = ap.parse_args()

    if not args.inner:
        # The backend is chosen at import time, so each measurement runs in
        # a fresh interpreter with the selection pinned via environment.
        for backend_env in ("0", "1"):
            env = dict(os.environ, ADAGB2_PURE_PYTHON=backend_env)
            subprocess.run(
                [sys.executable, __file__, "--inner",
                 "--dim", str(args.dim), "--iters", str(args.iters),
                 "--horizon", str(args.horizon)],
                env=env, check=True,
            )
        return

    from adagb2 import _kernels

    pure = importlib.import_module("adagb2._kernels.pure")
    t_kernel, outs = _bench_kernels(_kernels, args.dim, args.iters)
    _, ref = _bench_kernels(pure, args.dim, args.iters)
    for a, b in zip(outs, ref):
        assert np.array_equal(a, b), "backends disagree bitwise"
    t_solver = _bench_solver(min(args.dim, 20), args.horizon)
    per_call = t_kernel / args.iters * 1e6
    print(f"backend={_kernels.BACKEND:8s} dim={args.dim} "
          f"first_order: {per_call:8.3f} us/call   "
          f"solver {args.horizon} iters: {t_solver:6.2f} s")


if __name__ == "__main__":
    main()
