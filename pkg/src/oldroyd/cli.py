"""Command-line interface: run, normalize, certify, sweep."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import SolverConfig
from .energy import EnergyConstants
from .runner import certify_reports, read_timeseries, run_simulation


def _load_config(args) -> SolverConfig:
    with open(args.config) as fh:
        doc = json.load(fh)
    if getattr(args, "seed", None) is not None:
        doc["seed"] = args.seed
    return SolverConfig.from_dict(doc)


def _cmd_run(args) -> int:
    config = _load_config(args)
    return run_simulation(
        config, args.output_dir, emit_pressure=args.emit_pressure,
        dt_floor=args.dt_floor)


def _cmd_normalize(args) -> int:
    config = _load_config(args)
    json.dump(config.normalized(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _cmd_certify(args) -> int:
    reports = read_timeseries(args.timeseries)
    if not reports:
        print("empty time series", file=sys.stderr)
        return 1
    result = certify_reports(reports, EnergyConstants(),
                             big_c=args.big_c, m1=args.m1,
                             budget_rtol=args.budget_rtol)
    result["status"] = "Certified" if result["certified"] else "Uncertified"
    json.dump(result, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _sweep_worker(job) -> tuple[str, int]:
    doc, outdir, emit_pressure, dt_floor = job
    config = SolverConfig.from_dict(doc)
    code = run_simulation(config, outdir, emit_pressure=emit_pressure,
                          dt_floor=dt_floor)
    return outdir, code


def _cmd_sweep(args) -> int:
    with open(args.config) as fh:
        base = json.load(fh)
    if args.seed is not None:
        base["seed"] = args.seed
    alphas = [float(v) for v in args.alpha.split(",")] if args.alpha else [
        base["params"].get("alpha")]
    amplitudes = [float(v) for v in args.amplitude.split(",")] if args.amplitude \
        else [base.get("amplitude", 1e-3)]

    jobs = []
    for alpha in alphas:
        for amp in amplitudes:
            doc = json.loads(json.dumps(base))
            if alpha is not None:
                doc["params"]["alpha"] = alpha
                doc["params"].pop("lambda1", None)
                doc["params"].pop("lambda2", None)
            doc["amplitude"] = amp
            sub = Path(args.output_dir) / f"alpha_{alpha:g}_amp_{amp:g}"
            jobs.append((doc, str(sub), args.emit_pressure, args.dt_floor))

    workers = int(os.environ.get("OB_THREADS", "0")) or min(len(jobs), os.cpu_count() or 1)
    workers = max(1, min(workers, len(jobs)))
    failed = 0
    if workers == 1:
        results = [_sweep_worker(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    for outdir, code in results:
        print(f"{outdir}: exit {code}")
        failed += code != 0
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oldroyd",
        description="Pseudo-spectral Oldroyd-B solver with energy certification")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="advance a trajectory and certify it")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--output-dir", default="out")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--emit-pressure", action="store_true")
    run_p.add_argument("--dt-floor", type=float, default=None)
    run_p.set_defaults(func=_cmd_run)

    norm_p = sub.add_parser("normalize", help="echo the fully-resolved config")
    norm_p.add_argument("--config", required=True)
    norm_p.add_argument("--seed", type=int, default=None)
    norm_p.set_defaults(func=_cmd_normalize)

    cert_p = sub.add_parser("certify", help="post-process a time series CSV")
    cert_p.add_argument("timeseries")
    cert_p.add_argument("--big-c", type=float, default=None)
    cert_p.add_argument("--m1", type=float, default=None)
    cert_p.add_argument("--budget-rtol", type=float, default=1e-3)
    cert_p.set_defaults(func=_cmd_certify)

    sweep_p = sub.add_parser("sweep", help="Cartesian sweep over alpha/amplitude")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--output-dir", default="sweep")
    sweep_p.add_argument("--alpha", default=None,
                         help="comma-separated alpha values")
    sweep_p.add_argument("--amplitude", default=None,
                         help="comma-separated amplitudes")
    sweep_p.add_argument("--seed", type=int, default=None)
    sweep_p.add_argument("--emit-pressure", action="store_true")
    sweep_p.add_argument("--dt-floor", type=float, default=None)
    sweep_p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
