"""Gradient descent with small initialization for symmetric low-rank matrix completion.

Submodules: ``matops`` (linear algebra primitives), ``groundtruth``,
``sampling``, ``initialization``, ``optimizer``, ``loo`` (leave-one-out
ghost sequences), ``verify`` (trajectory checks) and ``harness`` (configs,
sweeps, artifacts, CLI).
"""

from .errors import (ArtifactError, ConfigError, DimensionError, DivergenceError, MCError,
                     NonFiniteError, NotOrthonormalError, SingularityError)
from .groundtruth import GroundTruth, generate_ground_truth, materialize
from .initialization import InitSpec, alignment_score, exact_param_alpha, init_direction
from .optimizer import EtaRule, RunConfig, RunResult, TraceRecord, run
from .sampling import ObservationSet, apply_R_Omega, apply_R_Omega_loo, sample_mask

__version__ = "0.1.0"

__all__ = [
    "ArtifactError", "ConfigError", "DimensionError", "DivergenceError", "MCError", "NonFiniteError",
    "NotOrthonormalError", "SingularityError", "GroundTruth", "generate_ground_truth", "materialize",
    "InitSpec", "alignment_score", "exact_param_alpha", "init_direction", "EtaRule", "RunConfig",
    "RunResult", "TraceRecord", "run", "ObservationSet", "apply_R_Omega", "apply_R_Omega_loo",
    "sample_mask",
]
