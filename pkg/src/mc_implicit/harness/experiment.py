"""Turning an :class:`ExperimentConfig` into runs, sweeps and aggregates."""

import warnings
from concurrent.futures import ProcessPoolExecutor
from typing import NamedTuple

import numpy as np

from ..groundtruth import RegimeWarning, generate_ground_truth
from ..initialization import InitSpec, exact_param_alpha
from ..optimizer import EtaRule, RunConfig, run
from ..sampling import sample_mask
from .artifacts import read_csv, write_csv

RECORD_FIELDS = ("p", "r_prime", "alpha", "replicate", "gt_seed", "mask_seed", "init_seed",
                 "final_error", "iterations", "status")
AGGREGATE_FIELDS = ("p", "r_prime", "alpha", "n", "median_error", "q25_error", "q75_error", "iqr_error",
                    "median_iterations", "n_converged", "n_diverged")


class SweepRecord(NamedTuple):
    p: float
    r_prime: int
    alpha: float
    replicate: int
    gt_seed: int
    mask_seed: int
    init_seed: int
    final_error: float
    iterations: int
    status: str


class CellAggregate(NamedTuple):
    p: float
    r_prime: int
    alpha: float
    n: int
    median_error: float
    q25_error: float
    q75_error: float
    iqr_error: float
    median_iterations: float
    n_converged: int
    n_diverged: int


def build_run_config(exp, cell, replicate=0, keep_states=False, record_every=None):
    """RunConfig for one grid cell ``(p, r_prime, alpha)`` and replicate.

    ``alpha == "exact"`` resolves to ``c_alpha * sigma_r / (kappa^1.5 d)``.
    """
    p, rp, alpha = cell
    gt_seed, mask_seed, init_seed, _ = exp.seeds(replicate)
    g = exp.ground_truth
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        gt = generate_ground_truth(g.d, g.r, kappa=g.kappa, sigma1=g.sigma1, basis_style=g.basis_style, seed=gt_seed)
    obs = sample_mask(g.d, p, mask_seed)
    if alpha == "exact":
        alpha = exact_param_alpha(gt, exp.init.c_alpha)
    o = exp.optimizer
    eta_rule = EtaRule.theorem(o.eta_value) if o.eta_rule == "theorem" else EtaRule.explicit(o.eta_value)
    return RunConfig(
        gt=gt, obs=obs, init=InitSpec(exp.init.scheme, rp, float(alpha), seed=init_seed), eta_rule=eta_rule,
        max_iters=o.max_iters, stop_tol=o.stop_tol,
        record_every=o.record_every if record_every is None else record_every, keep_states=keep_states,
    )


def run_cell(exp, cell, replicate=0, keep_states=False, record_every=None):
    return run(build_run_config(exp, cell, replicate, keep_states, record_every))


def _cell_record(args):
    exp, cell, replicate = args
    # only the final error matters in a sweep; record first and last iterates
    result = run_cell(exp, cell, replicate, record_every=exp.optimizer.max_iters + 1)
    gt_seed, mask_seed, init_seed, _ = exp.seeds(replicate)
    p, rp, alpha = cell
    return SweepRecord(p, rp, result.config.init.alpha if alpha == "exact" else alpha, replicate, gt_seed,
                       mask_seed, init_seed, result.relative_error(), result.iterations, result.status)


def run_sweep(exp, workers=1):
    """Every grid cell times every replicate; records come back sorted by coordinates."""
    jobs = [(exp, cell, k) for cell in exp.cells() for k in range(exp.n_seeds)]
    if workers <= 1 or len(jobs) <= 1:
        records = [_cell_record(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_cell_record, jobs))
    return sorted(records, key=lambda r: (r.p, r.r_prime, r.alpha, r.replicate))


def aggregate(records):
    """Median and interquartile range of the final error per ``(p, r_prime, alpha)`` cell."""
    cells = {}
    for rec in records:
        cells.setdefault((rec.p, rec.r_prime, rec.alpha), []).append(rec)
    out = []
    for key in sorted(cells):
        recs = cells[key]
        errs = np.array([r.final_error for r in recs])
        q25, med, q75 = np.percentile(errs, [25, 50, 75])
        out.append(CellAggregate(
            *key, n=len(recs), median_error=float(med), q25_error=float(q25), q75_error=float(q75),
            iqr_error=float(q75 - q25), median_iterations=float(np.median([r.iterations for r in recs])),
            n_converged=sum(r.status == "converged" for r in recs),
            n_diverged=sum(r.status == "diverged" for r in recs),
        ))
    return out


def write_records(path, records):
    return write_csv(path, RECORD_FIELDS, records)


def read_records(path):
    header, rows = read_csv(path)
    if tuple(header) != RECORD_FIELDS:
        raise ValueError(f"{path}: unexpected sweep header {header}")
    return [SweepRecord(float(r[0]), int(r[1]), float(r[2]), int(r[3]), int(r[4]), int(r[5]), int(r[6]),
                        float(r[7]), int(r[8]), r[9]) for r in rows]


def write_aggregates(path, aggregates):
    return write_csv(path, AGGREGATE_FIELDS, aggregates)


def chart_series(aggregates, axis):
    """``{label: (xs, medians)}`` with one series per ``r_prime`` along ``axis``."""
    series = {}
    for agg in sorted(aggregates, key=lambda a: (a.r_prime, getattr(a, axis))):
        xs, ys = series.setdefault(f"r'={agg.r_prime}", ([], []))
        xs.append(float(getattr(agg, axis)))
        ys.append(agg.median_error)
    return series
