"""Planted rank-r PSD ground truths ``X* = V* diag(spectrum) V*^T``."""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import rng as rng_mod
from .errors import DimensionError
from .matops import as_matrix, check_orthonormal, haar_orthogonal, two_inf_norm


class RegimeWarning(UserWarning):
    """The instance is outside the ``d >= 9 mu r`` regime the theory assumes."""


@dataclass(frozen=True, eq=False)
class GroundTruth:
    d: int
    r: int
    basis: np.ndarray
    spectrum: np.ndarray
    mu: float
    kappa: float
    seed: int = 0
    style: str = "custom"

    @property
    def sigma1(self):
        return float(self.spectrum[0])

    @property
    def sigma_r(self):
        return float(self.spectrum[-1])

    @property
    def factor(self):
        """``U* = V* Sigma*^{1/2}``."""
        return self.basis * np.sqrt(self.spectrum)

    def to_json(self):
        return {
            "d": self.d,
            "r": self.r,
            "spectrum": [float(x) for x in self.spectrum],
            "mu": self.mu,
            "kappa": self.kappa,
            "basis": self.basis.tolist(),
            "seed": self.seed,
            "style": self.style,
        }

    @classmethod
    def from_json(cls, obj):
        gt = from_basis(np.array(obj["basis"], dtype=float), np.array(obj["spectrum"], dtype=float),
                        seed=obj.get("seed", 0), style=obj.get("style", "custom"))
        if gt.d != obj["d"] or gt.r != obj["r"]:
            raise DimensionError("stored d/r disagree with the stored basis")
        return gt


def measure_incoherence(V):
    """``mu = (d / r) * ||V||_{2,inf}^2`` for an orthonormal ``d x r`` basis."""
    V = check_orthonormal(V, tol=1e-8)
    d, r = V.shape
    return d / r * two_inf_norm(V) ** 2


def from_basis(basis, spectrum, seed=0, style="custom"):
    """Wrap an explicit orthonormal basis and positive spectrum as a GroundTruth."""
    V = check_orthonormal(basis, tol=1e-8, name="basis")
    s = np.asarray(spectrum, dtype=float)
    if s.ndim != 1 or s.size != V.shape[1]:
        raise DimensionError(f"spectrum must have {V.shape[1]} entries")
    if np.any(s <= 0) or np.any(np.diff(s) > 0):
        raise ValueError("spectrum must be positive and nonincreasing")
    d, r = V.shape
    mu = measure_incoherence(V)
    if d < 9 * mu * r:
        warnings.warn(f"d={d} < 9*mu*r={9 * mu * r:.1f}; outside the assumed regime", RegimeWarning, stacklevel=2)
    V = np.array(V, copy=True)
    s = np.array(s, copy=True)
    V.flags.writeable = False
    s.flags.writeable = False
    return GroundTruth(d=d, r=r, basis=V, spectrum=s, mu=mu, kappa=float(s[0] / s[-1]), seed=seed, style=style)


def parse_style(style):
    """``"haar"``, ``"flat"`` or ``"spiky:s"`` -> (name, s)."""
    if style in ("haar", "flat"):
        return style, 0
    if isinstance(style, str) and style.startswith("spiky"):
        _, _, count = style.partition(":")
        s = int(count) if count else 1
        if s < 1:
            raise ValueError("spiky style needs s >= 1")
        return "spiky", s
    raise ValueError(f"unknown basis style {style!r}")


def _flat_basis(d, r):
    if d & (d - 1):
        raise ValueError(f"flat style needs d to be a power of two (Sylvester construction), got d={d}")
    return scipy.linalg.hadamard(d).astype(float)[:, :r] / np.sqrt(d)


def _spiky_basis(rng, d, r, s):
    B = haar_orthogonal(rng, d, r)
    rows = rng.choice(d, size=min(s, d), replace=False)
    for j, i in enumerate(rows):
        B[i, j % r] += 1.0
    Q, R = np.linalg.qr(B)
    return Q * np.sign(np.diag(R))


def generate_ground_truth(d, r, kappa=1.0, sigma1=1.0, basis_style="haar", seed=0):
    """Sample a rank-``r`` PSD ground truth.

    The spectrum is geometric from ``sigma1`` down to ``sigma1 / kappa``.
    ``basis_style`` is ``"haar"`` (orthonormalized Gaussian), ``"flat"``
    (columns of a Sylvester Hadamard matrix, mu = 1) or ``"spiky:s"`` (Haar
    basis with ``s`` coordinate spikes added, then re-orthonormalized).
    The incoherence is measured from the resulting basis.
    """
    if not 1 <= r <= d:
        raise DimensionError(f"need 1 <= r <= d, got r={r}, d={d}")
    if kappa < 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    if sigma1 <= 0:
        raise ValueError(f"sigma1 must be positive, got {sigma1}")
    name, s = parse_style(basis_style)
    gen = rng_mod.stream(seed, "groundtruth", name, d, r)
    if name == "haar":
        V = haar_orthogonal(gen, d, r)
    elif name == "flat":
        V = _flat_basis(d, r)
    else:
        V = _spiky_basis(gen, d, r, s)
    spectrum = np.geomspace(sigma1, sigma1 / kappa, r) if r > 1 else np.array([float(sigma1)])
    spectrum[0] = sigma1
    spectrum[-1] = sigma1 / kappa if r > 1 else sigma1
    return from_basis(V, spectrum, seed=seed, style=basis_style)


def materialize(gt):
    """Dense symmetric ``V* diag(spectrum) V*^T``."""
    X = (gt.basis * gt.spectrum) @ gt.basis.T
    return (X + X.T) / 2.0
