"""Command line entry point: ``mc-implicit {run,sweep,verify,loo,concentration}``.

Exit codes: 0 success, 1 a run diverged, 2 usage/config/artifact error,
3 an assertion failed (``--assert`` checks, or the incoherence budget
triangle inequality, which can only fail through a bug).
"""

import argparse
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from .. import loo, verify
from ..errors import ConfigError, MCError
from ..groundtruth import RegimeWarning
from ..optimizer import run
from .artifacts import replay, write_csv, write_run_artifact, write_trace_csv
from .baselines import compare_to_baseline
from .config import dumps_config, load_config, preset_names
from .experiment import aggregate, build_run_config, chart_series, run_sweep, write_aggregates, write_records
from .svg import line_chart

EXIT_OK, EXIT_DIVERGED, EXIT_USAGE, EXIT_ASSERT = 0, 1, 2, 3
ENV_OUT = "MC_IMPLICIT_OUT"
DEFAULT_OUT = "mc_implicit_out"


def output_root(arg):
    return Path(arg or os.environ.get(ENV_OUT) or DEFAULT_OUT)


def _load(args):
    exp = load_config(args.config)
    if args.seed is not None:
        exp = exp.with_master_seed(args.seed)
    return exp


def _verify_and_report(result, out_dir, gamma1, c_max, assert_mode):
    reports = verify.run_all_checks(result, gamma1=gamma1, c_max=c_max)
    table = verify.format_table(reports)
    (out_dir / "checks.json").write_text(verify.reports_to_json(reports) + "\n", encoding="utf-8")
    (out_dir / "checks.txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    bad = verify.explicit_violations(reports)
    if bad:
        print(f"{bad} explicit-constant violation(s)", file=sys.stderr)
    return EXIT_ASSERT if (assert_mode and bad) else EXIT_OK


def _ghost_outputs(result, indices, kinds, out_dir, basin_constant=loo.BASIN_CONSTANT):
    """Write ghost CSVs and the budget series; return an exit code."""
    code = EXIT_OK
    gdir = out_dir / "ghosts"
    for kind in kinds:
        ghosts = loo.run_ghosts(result, indices, kind)
        for g in ghosts:
            write_csv(gdir / f"{kind}_l{g.l}.csv", loo.GHOST_FIELDS, loo.ghost_rows(result, g))
        if kind == "weakly_coupled":
            budgets = [loo.incoherence_budget(result, ghosts, t) for t in range(len(result.states))]
            write_csv(out_dir / "incoherence_budget.csv", loo.IncoherenceBudget._fields, budgets)
            worst = max(b.prox_err for b in budgets)
            print(f"weakly coupled ghosts {indices}: max prox_err {worst:.3e}, "
                  f"within sqrt(mu r/4d): {all(b.prox_within_target for b in budgets)}")
            if any(b.actual > b.bound + 1e-8 for b in budgets):
                print("incoherence budget triangle inequality violated", file=sys.stderr)
                code = EXIT_ASSERT
        elif result.config.init.r_prime == result.config.gt.r:
            t0 = loo.first_basin_entry(result, ghosts, basin_constant)
            print(f"classical ghosts {indices}: basin entry at t={t0}")
    return code


def cmd_run(args):
    exp = _load(args)
    cells = exp.cells()
    if len(cells) != 1:
        raise ConfigError(f"run needs a single grid cell, got {len(cells)}; use 'sweep'", "--config")
    diag = exp.diagnostics
    needs_states = diag.verify or bool(diag.loo.kinds)
    if needs_states and exp.optimizer.record_every != 1:
        raise ConfigError("verify and loo diagnostics need record_every = 1", "optimizer.record_every")
    cfg = build_run_config(exp, cells[0], 0, keep_states=needs_states)
    result = run(cfg)
    out_dir = output_root(args.out or exp.output.directory) / exp.name
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trace_csv(out_dir / "trace.csv", result.trace)
    write_run_artifact(out_dir / "run.json", result, extra=exp.to_json())
    (out_dir / "config.json").write_text(dumps_config(exp), encoding="utf-8")
    print(f"{exp.name}: {result.status} after {result.iterations} iterations, "
          f"relative error {result.relative_error():.3e}, eta {result.eta:.4g}")
    code = EXIT_OK
    if diag.verify:
        code = max(code, _verify_and_report(result, out_dir, diag.gamma1, diag.c_max, args.assert_mode))
    if diag.loo.kinds:
        indices = loo.parse_index_list(diag.loo.indices, cfg.gt.d, exp.seeds(0)[3])
        code = max(code, _ghost_outputs(result, indices, diag.loo.kinds, out_dir, diag.basin_constant))
    if result.status == "diverged":
        return EXIT_DIVERGED
    return code


def cmd_sweep(args):
    exp = _load(args)
    records = run_sweep(exp, workers=args.workers)
    aggs = aggregate(records)
    out_dir = output_root(args.out or exp.output.directory) / exp.name
    out_dir.mkdir(parents=True, exist_ok=True)
    write_records(out_dir / "sweep.csv", records)
    write_aggregates(out_dir / "aggregates.csv", aggs)
    (out_dir / "config.json").write_text(dumps_config(exp), encoding="utf-8")
    axes = exp.swept_axes()
    axis = next((a for a in ("alpha", "p", "r_prime") if a in axes), "alpha")
    if exp.output.svg:
        svg = line_chart(chart_series(aggs, axis), title=exp.name, xlabel=axis, ylabel="median relative error",
                         logx=axis == "alpha", logy=True)
        (out_dir / "chart.svg").write_text(svg, encoding="utf-8")
    for a in aggs:
        print(f"p={a.p:<5g} r'={a.r_prime:<3d} alpha={a.alpha:<8.3g} median={a.median_error:.3e} "
              f"iqr={a.iqr_error:.2e} iters={a.median_iterations:g}")
    return EXIT_DIVERGED if any(r.status == "diverged" for r in records) else EXIT_OK


def cmd_verify(args):
    result = replay(args.artifact)
    out_dir = Path(args.out) if args.out else Path(args.artifact).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    return _verify_and_report(result, out_dir, args.gamma1, args.c_max, args.assert_mode)


def cmd_loo(args):
    result = replay(args.artifact)
    out_dir = Path(args.out) if args.out else Path(args.artifact).parent
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    bad = [k for k in kinds if k not in loo.KINDS]
    if bad:
        raise ConfigError(f"unknown ghost kind {bad[0]!r}", "--kinds")
    seed = 0 if args.seed is None else args.seed
    indices = loo.parse_index_list(args.indices, result.config.gt.d, seed)
    return _ghost_outputs(result, indices, kinds, out_dir, args.basin_constant)


def cmd_concentration(args):
    reports = verify.estimate_concentration_constants(args.d, args.p, args.r, args.trials,
                                                      0 if args.seed is None else args.seed)
    print(verify.format_table(reports))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "concentration.json").write_text(verify.reports_to_json(reports) + "\n", encoding="utf-8")
    failures = compare_to_baseline(reports, args.d, args.p, args.r)
    for msg in failures:
        print(msg, file=sys.stderr)
    bad = verify.explicit_violations(reports)
    return EXIT_ASSERT if args.assert_mode and (failures or bad) else EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default: ${ENV_OUT} or ./{DEFAULT_OUT})")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--assert", dest="assert_mode", action="store_true",
                        help="exit 3 on explicit-constant violations")

    parser = argparse.ArgumentParser(prog="mc-implicit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="one run with its diagnostics")
    p.add_argument("--config", required=True, help=f"config file or preset ({', '.join(preset_names())})")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", parents=[common], help="grid sweep with aggregates and chart")
    p.add_argument("--config", required=True, help="config file or preset name")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", parents=[common], help="check a stored run")
    p.add_argument("artifact", help="run.json written by 'run'")
    p.add_argument("--gamma1", type=float, default=verify.GAMMA1)
    p.add_argument("--c-max", type=float, default=verify.C_MAX)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("loo", parents=[common], help="leave-one-out ghosts for a stored run")
    p.add_argument("artifact", help="run.json written by 'run'")
    p.add_argument("--indices", default="sample:16", help="'sample:k', 'all' or a comma list (0-based)")
    p.add_argument("--kinds", default="weakly_coupled,classical")
    p.add_argument("--basin-constant", type=float, default=loo.BASIN_CONSTANT)
    p.set_defaults(func=cmd_loo)

    p = sub.add_parser("concentration", parents=[common], help="Monte Carlo sampling constants")
    p.add_argument("--d", type=int, default=100)
    p.add_argument("--p", type=float, default=0.3)
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--trials", type=int, default=50)
    p.set_defaults(func=cmd_concentration)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            with np.errstate(over="ignore", invalid="ignore"):
                return args.func(args)
    except (MCError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
