"""Initialization directions (Gaussian, orthogonal, spectral) and the alignment score."""

from dataclasses import dataclass

import numpy as np

from . import constants
from . import rng as rng_mod
from .errors import DimensionError, SingularityError
from .matops import as_matrix, haar_orthogonal, op_norm, partial_eig_sym, sigma_k
from .sampling import apply_R_Omega

SCHEMES = ("gaussian", "orthogonal", "spectral")


@dataclass(frozen=True)
class InitSpec:
    scheme: str
    r_prime: int
    alpha: float
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.r_prime < 1:
            raise ValueError(f"r_prime must be >= 1, got {self.r_prime}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    def to_json(self):
        return {"scheme": self.scheme, "r_prime": self.r_prime, "alpha": self.alpha, "seed": self.seed}


def init_direction(spec, d, obs=None, observed=None):
    """Unit-operator-norm direction ``Z`` (``d x r'``).

    The spectral scheme sees only the mask and ``P_Omega(X*)``: it builds
    ``R_Omega(X*)``, keeps the ``r'`` eigenpairs of largest magnitude,
    clamps negative eigenvalues to zero and normalizes ``V Sigma^{1/2}``.
    """
    rp = spec.r_prime
    if rp > d:
        raise DimensionError(f"r_prime={rp} exceeds d={d}")
    gen = rng_mod.stream(spec.seed, "init", spec.scheme, int(d), int(rp))
    if spec.scheme == "gaussian":
        G = gen.standard_normal((d, rp))
        return G / op_norm(G)
    if spec.scheme == "orthogonal":
        if rp != d:
            raise DimensionError(f"orthogonal initialization needs r_prime == d, got {rp} != {d}")
        return haar_orthogonal(gen, d, d)
    if obs is None or observed is None:
        raise ValueError("spectral initialization needs the observation set and P_Omega(X*)")
    R = apply_R_Omega(obs, observed)
    vals, vecs = partial_eig_sym(R, rp)
    vals = np.clip(vals, 0.0, None)
    if not np.any(vals > 0):
        raise SingularityError("every retained eigenvalue of R_Omega(X*) is nonpositive", sigma_min=0.0)
    U = vecs * np.sqrt(vals)
    return U / op_norm(U)


def alignment_score(Z, Vstar):
    """``sigma_r(V*^T Z)``, the r-th singular value of Z projected on span(V*)."""
    Z = as_matrix(Z, "Z")
    Vstar = as_matrix(Vstar, "Vstar")
    if Z.shape[0] != Vstar.shape[0]:
        raise DimensionError(f"row counts differ: {Z.shape[0]} vs {Vstar.shape[0]}")
    nz = op_norm(Z)
    if abs(nz - 1.0) > constants.DEFAULT.unit_norm:
        raise ValueError(f"Z must have unit operator norm, got {nz:.12g}")
    return sigma_k(Vstar.T @ Z, Vstar.shape[1])


def scale_init(Z, alpha):
    """``U_0 = alpha * Z``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return alpha * np.asarray(Z, dtype=float)


def exact_param_alpha(gt, c_alpha=0.1):
    """Initialization scale ``c_alpha * sigma_r / (kappa^1.5 * d)`` for the exactly-parameterized regime."""
    return c_alpha * gt.sigma_r / (gt.kappa ** 1.5 * gt.d)


def overparam_alpha_cap(gt):
    """Largest admissible scale ``sqrt(sigma_1 / d)`` in the over-parameterized regime."""
    return float(np.sqrt(gt.sigma1 / gt.d))
