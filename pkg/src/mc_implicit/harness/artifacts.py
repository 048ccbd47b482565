"""CSV traces and JSON run artifacts.

Floats are written with 17 significant digits (``%.16e``) so a CSV read back
gives the same doubles. A run artifact stores everything needed to replay the
run bit for bit: ground truth, mask (run-length encoded), initial point, step
size rule and the recorded trace. Loading an artifact replays the run and
refuses to continue if the replayed trace differs from the stored one.
"""

import csv
import io
import json
from pathlib import Path

import numpy as np

from ..errors import ArtifactError
from ..groundtruth import GroundTruth
from ..initialization import InitSpec
from ..optimizer import TRACE_FIELDS, EtaRule, RunConfig, TraceRecord, run
from ..sampling import ObservationSet

ARTIFACT_SCHEMA = 1
FLOAT_FMT = "%.16e"


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % float(v)
    return str(v)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # newline="" keeps the RFC 4180 CRLF terminators untouched
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(csv_text(header, rows))
    return path


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ArtifactError(f"{path}: empty CSV")
    return rows[0], rows[1:]


def write_trace_csv(path, trace):
    return write_csv(path, TRACE_FIELDS, trace)


def read_trace_csv(path):
    header, rows = read_csv(path)
    missing = [c for c in TRACE_FIELDS if c not in header]
    if missing:
        raise ArtifactError(f"{path}: trace is missing column {missing[0]!r}")
    idx = [header.index(c) for c in TRACE_FIELDS]
    return [TraceRecord(int(r[idx[0]]), *(float(r[i]) for i in idx[1:])) for r in rows]


def run_config_to_json(cfg):
    return {
        "ground_truth": cfg.gt.to_json(),
        "observations": cfg.obs.to_json(),
        "init": cfg.init.to_json(),
        "eta_rule": {"kind": cfg.eta_rule.kind, "value": cfg.eta_rule.value},
        "max_iters": cfg.max_iters,
        "stop_tol": cfg.stop_tol,
        "record_every": cfg.record_every,
    }


def run_config_from_json(obj, keep_states=False):
    try:
        return RunConfig(
            gt=GroundTruth.from_json(obj["ground_truth"]),
            obs=ObservationSet.from_json(obj["observations"]),
            init=InitSpec(**obj["init"]),
            eta_rule=EtaRule(**obj["eta_rule"]),
            max_iters=int(obj["max_iters"]),
            stop_tol=float(obj["stop_tol"]),
            record_every=int(obj["record_every"]),
            keep_states=keep_states,
        )
    except KeyError as exc:
        raise ArtifactError(f"run config is missing field {exc.args[0]!r}") from exc


def final_summary(result):
    last = result.trace[-1] if result.trace else None
    return {
        "iterations": result.iterations,
        "eta": result.eta,
        "err_fro": last.err_fro if last else None,
        "relative_error": result.relative_error() if last else None,
        "max_v_incoh": max(rec.v_incoh for rec in result.trace) if result.trace else None,
    }


def artifact_dict(result, extra=None):
    out = {
        "schema": ARTIFACT_SCHEMA,
        "config": run_config_to_json(result.config),
        "initial_point": result.U0.tolist(),
        "eta": result.eta,
        "trace": {"columns": list(TRACE_FIELDS), "rows": [list(rec) for rec in result.trace]},
        "final_summary": final_summary(result),
        "status": result.status,
    }
    if extra:
        out["experiment"] = extra
    return out


def write_run_artifact(path, result, extra=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(artifact_dict(result, extra), sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_run_artifact(path):
    """Decode an artifact into ``(run_config, initial_point, trace, status)``."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{path}: invalid JSON: {exc}") from exc
    for key in ("config", "initial_point", "trace", "status"):
        if key not in obj:
            raise ArtifactError(f"{path}: artifact is missing {key!r}")
    columns = obj["trace"].get("columns", [])
    missing = [c for c in TRACE_FIELDS if c not in columns]
    if missing:
        raise ArtifactError(f"{path}: trace is missing column {missing[0]!r}")
    idx = [columns.index(c) for c in TRACE_FIELDS]
    trace = []
    for row in obj["trace"]["rows"]:
        if len(row) != len(columns):
            raise ArtifactError(f"{path}: trace row has {len(row)} values, expected {len(columns)}")
        trace.append(TraceRecord(int(row[idx[0]]), *(float(row[i]) for i in idx[1:])))
    cfg = run_config_from_json(obj["config"])
    return cfg, np.array(obj["initial_point"], dtype=float), trace, obj["status"]


def replay(path, require_full=True):
    """Re-run a stored run with states kept; the replayed trace must match exactly."""
    cfg, U0, trace, status = load_run_artifact(path)
    if require_full and cfg.record_every != 1:
        raise ArtifactError(f"{path}: needs a full-resolution trace (record_every=1), got {cfg.record_every}")
    cfg = RunConfig(gt=cfg.gt, obs=cfg.obs, init=cfg.init, eta_rule=cfg.eta_rule, max_iters=cfg.max_iters,
                    stop_tol=cfg.stop_tol, record_every=cfg.record_every, keep_states=True)
    result = run(cfg, U0=U0)
    if result.status != status or len(result.trace) != len(trace):
        raise ArtifactError(f"{path}: replay ended with {result.status} after {len(result.trace)} records, "
                            f"stored {status} after {len(trace)}")
    for a, b in zip(result.trace, trace):
        if tuple(a) != tuple(b):
            raise ArtifactError(f"{path}: replay diverges from the stored trace at t={b.t}")
    return result
