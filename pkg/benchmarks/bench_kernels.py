"""Compare the compiled pointwise kernels against the numpy fallback.

Run:  python3 benchmarks/bench_kernels.py [--dim 3] [--n 32] [--repeat 50]

Times the three hot pointwise kernels (g_a, symmetric outer product,
advective dot-grad) on realistic array sizes, plus one full coupled time
step through each backend for end-to-end context.  The backends share the
front-end in oldroyd.kernels; the fallback is forced per-process with
OLDROYD_PURE_PYTHON=1, so this script re-executes itself once per backend.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def time_fn(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_backend(dim, n, repeat):
    from oldroyd import kernels
    from oldroyd.config import SolverConfig, make_initial
    from oldroyd.grid import GridSpec
    from oldroyd.leray import PhysicalParams
    from oldroyd.picard import step_coupled

    rng = np.random.default_rng(0)
    npts = n ** dim
    nc = dim * (dim + 1) // 2
    tau = np.ascontiguousarray(rng.standard_normal((nc, npts)))
    grad_u = np.ascontiguousarray(rng.standard_normal((dim * dim, npts)))
    v = np.ascontiguousarray(rng.standard_normal((dim, npts)))
    derivs = np.ascontiguousarray(rng.standard_normal((nc, dim, npts)))

    results = {
        "backend": kernels.BACKEND_NAME,
        "ga_ms": 1e3 * time_fn(
            lambda: kernels.backend.ga(tau, grad_u, 1.0, dim), repeat),
        "sym_outer_ms": 1e3 * time_fn(
            lambda: kernels.backend.sym_outer(v, dim), repeat),
        "dot_grad_ms": 1e3 * time_fn(
            lambda: kernels.backend.dot_grad(v, derivs), repeat),
    }

    grid = GridSpec.make(dim, n)
    params = PhysicalParams(re=1.0, we=1.0, alpha=0.9, a=1.0)
    config = SolverConfig(grid=grid, params=params, dt=0.005, t_end=1.0,
                          initial_condition="taylor_green", amplitude=1e-3)
    state = make_initial(config)
    state, _ = step_coupled(state, config.dt, params=params)  # warm-up

    def one_step():
        nonlocal state
        state, _ = step_coupled(state, config.dt, params=params)

    results["coupled_step_ms"] = 1e3 * time_fn(one_step, max(5, repeat // 5))
    return results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--dim", type=int, default=3, choices=(2, 3))
    parser.add_argument("--n", type=int, default=32)
    parser.add_argument("--repeat", type=int, default=50)
    parser.add_argument("--worker", action="store_true",
                        help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.worker:
        json.dump(run_backend(args.dim, args.n, args.repeat), sys.stdout)
        return

    rows = []
    for force_python in (False, True):
        env = dict(os.environ)
        if force_python:
            env["OLDROYD_PURE_PYTHON"] = "1"
        else:
            env.pop("OLDROYD_PURE_PYTHON", None)
        cmd = [sys.executable, __file__, "--worker", "--dim", str(args.dim),
               "--n", str(args.n), "--repeat", str(args.repeat)]
        out = subprocess.run(cmd, env=env, capture_output=True, text=True,
                             check=True)
        rows.append(json.loads(out.stdout))

    names = ("ga_ms", "sym_outer_ms", "dot_grad_ms", "coupled_step_ms")
    print(f"dim={args.dim} n={args.n} (best of {args.repeat})")
    header = f"{'kernel':>16}" + "".join(f"{r['backend']:>12}" for r in rows)
    print(header + f"{'speedup':>10}")
    for name in names:
        vals = [r[name] for r in rows]
        speedup = vals[1] / vals[0] if vals[0] > 0 else float("inf")
        print(f"{name:>16}" + "".join(f"{v:12.3f}" for v in vals)
              + f"{speedup:10.2f}x")


if __name__ == "__main__":
    main()
