"""Experiment configuration: strict JSON parsing, grids and seed derivation.

A config names one master seed. Every stochastic consumer (ground truth,
mask, initialization, ghost sampling) gets its seed from
``derive_seed(master, purpose, replicate)`` unless the config pins it. Grid
coordinates (p, r', alpha) never enter the seed; they enter the labels of
the random stream instead, so adding a grid value leaves existing cells
untouched and cells that share a replicate share the same ground truth.
"""

import itertools
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..errors import ConfigError
from ..groundtruth import parse_style
from ..initialization import SCHEMES
from ..rng import derive_seed

SCHEMA_VERSION = 1
PRESET_DIR = Path(__file__).resolve().parent.parent / "presets"


def _grid(value, cast):
    vals = value if isinstance(value, (list, tuple)) else [value]
    if not vals:
        raise ValueError("grid must not be empty")
    return tuple(cast(v) for v in vals)


def _alpha(v):
    if v == "exact":
        return v
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"alpha must be a number or 'exact', got {v!r}")
    if not v > 0:
        raise ValueError(f"alpha must be positive, got {v}")
    return float(v)


def _seed(v):
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise ValueError(f"seed must be a nonnegative integer or null, got {v!r}")
    return v


@dataclass(frozen=True)
class GroundTruthSpec:
    d: int = 100
    r: int = 3
    kappa: float = 1.0
    sigma1: float = 1.0
    basis_style: str = "haar"
    seed: int | None = None

    def __post_init__(self):
        if self.d < 1 or not 1 <= self.r <= self.d:
            raise ValueError(f"need 1 <= r <= d, got d={self.d}, r={self.r}")
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")
        if self.sigma1 <= 0:
            raise ValueError("sigma1 must be positive")
        parse_style(self.basis_style)
        _seed(self.seed)


@dataclass(frozen=True)
class SamplingSpec:
    p: tuple = (0.5,)
    seed: int | None = None

    def __post_init__(self):
        ps = _grid(self.p, float)
        if any(not 0 < x <= 1 for x in ps):
            raise ValueError(f"every p must lie in (0, 1], got {ps}")
        object.__setattr__(self, "p", ps)
        _seed(self.seed)


@dataclass(frozen=True)
class InitGrid:
    scheme: str = "gaussian"
    r_prime: tuple = (3,)
    alpha: tuple = (1e-3,)
    c_alpha: float = 0.1
    seed: int | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        rps = _grid(self.r_prime, int)
        if any(x < 1 for x in rps):
            raise ValueError("every r_prime must be >= 1")
        object.__setattr__(self, "r_prime", rps)
        object.__setattr__(self, "alpha", _grid(self.alpha, _alpha))
        if not self.c_alpha > 0:
            raise ValueError("c_alpha must be positive")
        _seed(self.seed)


@dataclass(frozen=True)
class OptimizerSpec:
    eta_rule: str = "theorem"
    eta_value: float = 0.25
    max_iters: int = 1000
    stop_tol: float = 0.0
    record_every: int = 1

    def __post_init__(self):
        if self.eta_rule not in ("theorem", "explicit"):
            raise ValueError("eta_rule must be 'theorem' or 'explicit'")
        if not self.eta_value > 0:
            raise ValueError("eta_value must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.stop_tol < 0:
            raise ValueError("stop_tol must be >= 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass(frozen=True)
class LooSpec:
    indices: str = "sample:16"
    kinds: tuple = ()
    seed: int | None = None

    def __post_init__(self):
        kinds = tuple(self.kinds)
        bad = [k for k in kinds if k not in ("classical", "weakly_coupled")]
        if bad:
            raise ValueError(f"unknown ghost kinds {bad}")
        object.__setattr__(self, "kinds", kinds)
        spec = str(self.indices)
        if not (spec == "all" or spec.startswith("sample:") or all(x.strip().isdigit() for x in spec.split(","))):
            raise ValueError(f"indices must be 'all', 'sample:k' or a comma list, got {spec!r}")
        _seed(self.seed)


@dataclass(frozen=True)
class DiagnosticsSpec:
    verify: bool = False
    gamma1: float = 1.0
    c_max: float = 100.0
    basin_constant: float = 0.1
    loo: LooSpec = field(default_factory=LooSpec)


@dataclass(frozen=True)
class OutputSpec:
    directory: str | None = None
    svg: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    schema: int = SCHEMA_VERSION
    master_seed: int = 0
    n_seeds: int = 1
    ground_truth: GroundTruthSpec = field(default_factory=GroundTruthSpec)
    sampling: SamplingSpec = field(default_factory=SamplingSpec)
    init: InitGrid = field(default_factory=InitGrid)
    optimizer: OptimizerSpec = field(default_factory=OptimizerSpec)
    diagnostics: DiagnosticsSpec = field(default_factory=DiagnosticsSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    def __post_init__(self):
        if self.schema != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {self.schema}, expected {SCHEMA_VERSION}")
        if self.n_seeds < 1:
            raise ValueError("n_seeds must be >= 1")
        _seed(self.master_seed)

    def cells(self):
        """Grid coordinates ``(p, r_prime, alpha)`` in declaration order."""
        return list(itertools.product(self.sampling.p, self.init.r_prime, self.init.alpha))

    def swept_axes(self):
        return [name for name, vals in (("p", self.sampling.p), ("r_prime", self.init.r_prime),
                                        ("alpha", self.init.alpha)) if len(vals) > 1]

    def seeds(self, replicate):
        """``(gt_seed, mask_seed, init_seed, loo_seed)`` for one replicate."""
        def pick(pinned, purpose):
            if pinned is not None:
                return pinned + replicate
            return derive_seed(self.master_seed, purpose, replicate)
        return (pick(self.ground_truth.seed, "groundtruth"), pick(self.sampling.seed, "mask"),
                pick(self.init.seed, "init"), pick(self.diagnostics.loo.seed, "loo"))

    def with_master_seed(self, seed):
        return replace(self, master_seed=int(seed))

    def to_json(self):
        return _dump(self)


_NESTED = {
    "ground_truth": GroundTruthSpec, "sampling": SamplingSpec, "init": InitGrid,
    "optimizer": OptimizerSpec, "diagnostics": DiagnosticsSpec, "output": OutputSpec, "loo": LooSpec,
}


def _dump(obj):
    out = {}
    for f in fields(obj):
        v = getattr(obj, f.name)
        if f.name in _NESTED:
            v = _dump(v)
        elif isinstance(v, tuple):
            v = list(v)
        out[f.name] = v
    return out


def _check_type(v, default, path):
    if isinstance(default, bool):
        if not isinstance(v, bool):
            raise ConfigError(f"expected true/false, got {v!r}", path)
    elif isinstance(default, int) and not isinstance(default, bool) and default is not None:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"expected an integer, got {v!r}", path)
    elif isinstance(default, float):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"expected a number, got {v!r}", path)
        return float(v)
    elif isinstance(default, str) and not isinstance(v, str):
        raise ConfigError(f"expected a string, got {v!r}", path)
    return v


def _build(cls, obj, path):
    if not isinstance(obj, dict):
        raise ConfigError(f"expected an object, got {type(obj).__name__}", path)
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(obj) - set(known))
    if unknown:
        raise ConfigError(f"unknown field {unknown[0]!r}", f"{path}.{unknown[0]}" if path else unknown[0])
    kwargs = {}
    defaults = cls()
    for name, value in obj.items():
        sub = f"{path}.{name}" if path else name
        if name in _NESTED:
            kwargs[name] = _build(_NESTED[name], value, sub)
        else:
            kwargs[name] = _check_type(value, getattr(defaults, name), sub)
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), path or "<root>") from exc


def parse_config(obj):
    """Build an :class:`ExperimentConfig` from a decoded JSON object; unknown fields are rejected."""
    return _build(ExperimentConfig, obj, "")


def load_config(source):
    """Load from a file path or the name of a bundled preset."""
    path = Path(source)
    if not path.exists():
        preset = PRESET_DIR / f"{source}.json"
        if not preset.exists():
            raise ConfigError(f"no such file or preset: {source}", "--config")
        path = preset
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", str(path)) from exc
    return parse_config(obj)


def preset_names():
    return sorted(p.stem for p in PRESET_DIR.glob("*.json"))


def dumps_config(cfg):
    return json.dumps(cfg.to_json(), indent=2, sort_keys=True) + "\n"
