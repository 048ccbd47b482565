"""Recorded empirical constants and the x1.5 regression comparison."""

import json
from pathlib import Path

BASELINE_PATH = Path(__file__).resolve().parent.parent / "baselines.json"
TOLERANCE_FACTOR = 1.5


def load_baselines(path=BASELINE_PATH):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def concentration_baseline(d, p, r, path=BASELINE_PATH):
    for entry in load_baselines(path).get("concentration", []):
        if entry["d"] == d and entry["p"] == p and entry["r"] == r:
            return entry["constants"]
    return None


def compare_to_baseline(reports, d, p, r, factor=TOLERANCE_FACTOR, path=BASELINE_PATH):
    """Messages for every measured constant above ``factor`` times its recorded value."""
    base = concentration_baseline(d, p, r, path)
    if base is None:
        return []
    return [f"{rep.check_name}: constant {rep.empirical_constant:.4g} exceeds {factor} x baseline {base[rep.check_name]:.4g}"
            for rep in reports if rep.check_name in base and rep.empirical_constant > factor * base[rep.check_name]]
