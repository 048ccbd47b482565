"""Bernoulli observation masks and the sampling operators built on them.

Every ordered pair ``(i, j)``, the diagonal included, is observed
independently with probability ``p``; the mask is *not* symmetric. Symmetry
enters only through ``R_Omega = (P_Omega + P_Omega^T) / (2p)``.

Indices are 0-based throughout (``l`` in ``range(d)``).
"""

from dataclasses import dataclass

import numpy as np

from . import rng as rng_mod
from .errors import DimensionError
from .matops import as_matrix, op_norm


@dataclass(frozen=True, eq=False)
class ObservationSet:
    d: int
    p: float
    mask: np.ndarray
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p must lie in (0, 1], got {self.p}")
        m = np.asarray(self.mask, dtype=bool)
        if m.shape != (self.d, self.d):
            raise DimensionError(f"mask must be {self.d}x{self.d}, got {m.shape}")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "mask", m)

    @property
    def observed_fraction(self):
        return float(self.mask.mean())

    def with_mask(self, mask):
        return ObservationSet(d=self.d, p=self.p, mask=mask, seed=self.seed)

    def to_json(self):
        return {"d": self.d, "p": self.p, "seed": self.seed, "rle": rle_encode(self.mask)}

    @classmethod
    def from_json(cls, obj):
        d = int(obj["d"])
        return cls(d=d, p=float(obj["p"]), mask=rle_decode(obj["rle"], (d, d)), seed=int(obj.get("seed", 0)))


def rle_encode(mask):
    """Run lengths of the row-major flattened mask, starting with a run of zeros."""
    flat = np.asarray(mask, dtype=bool).ravel()
    if flat.size == 0:
        return []
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return [int(x) for x in runs]


def rle_decode(runs, shape):
    values = np.zeros(len(runs), dtype=bool)
    values[1::2] = True
    flat = np.repeat(values, runs)
    if flat.size != int(np.prod(shape)):
        raise DimensionError(f"run lengths cover {flat.size} entries, expected {np.prod(shape)}")
    return flat.reshape(shape)


def sample_mask(d, p, seed):
    """Draw a Bernoulli(p) mask over all ``d*d`` ordered pairs."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if d < 1:
        raise DimensionError(f"d must be >= 1, got {d}")
    gen = rng_mod.stream(seed, "mask", int(d), float(p))
    mask = gen.random((d, d)) < p
    return ObservationSet(d=d, p=float(p), mask=mask, seed=seed)


def _check(obs, X):
    X = as_matrix(X, "X")
    if X.shape != (obs.d, obs.d):
        raise DimensionError(f"X must be {obs.d}x{obs.d}, got {X.shape}")
    return X


def apply_P_Omega(obs, X):
    """Zero out the unobserved entries of ``X``."""
    X = _check(obs, X)
    return np.where(obs.mask, X, 0.0)


def apply_R_Omega(obs, X):
    """``(P_Omega(X) + P_Omega(X)^T) / (2p)``; exactly symmetric."""
    A = apply_P_Omega(obs, X)
    return (A + A.T) / (2.0 * obs.p)


def _loo_project(obs, l, X):
    A = np.where(obs.mask, X, 0.0)
    A[l, :] = obs.p * X[l, :]
    A[:, l] = obs.p * X[:, l]
    return A


def apply_R_Omega_loo(obs, l, X):
    """Leave-one-out operator ``R_{Omega^(l)}``.

    Row and column ``l`` are replaced by their expected values ``p * X``
    before symmetrizing, so the result never reads mask row/column ``l``.
    """
    X = _check(obs, X)
    if not 0 <= l < obs.d:
        raise DimensionError(f"l must lie in [0, {obs.d}), got {l}")
    A = _loo_project(obs, l, X)
    return (A + A.T) / (2.0 * obs.p)


def deviation_matrix(obs):
    """``(Omega + Omega^T) / (2p) - J``."""
    W = obs.mask.astype(float)
    return (W + W.T) / (2.0 * obs.p) - 1.0


def omega_deviation(obs):
    """Operator norm of ``(Omega + Omega^T) / (2p) - J``."""
    return op_norm(deviation_matrix(obs))


def loo_omega_deviation(obs, l):
    """Same quantity for the leave-one-out mask: row and column ``l`` zeroed."""
    D = deviation_matrix(obs)
    D[l, :] = 0.0
    D[:, l] = 0.0
    return op_norm(D)
