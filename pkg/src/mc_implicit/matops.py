"""Matrix primitives: norms, polar orthonormalization, projections, Procrustes.

Everything here is a pure function on dense ``numpy`` arrays. Singular
vectors are sign-normalized (largest-magnitude entry of each left vector is
positive) so results do not depend on the LAPACK backend.
"""

from typing import NamedTuple

import numpy as np
import scipy.linalg

from . import constants
from .errors import AsymmetryError, DimensionError, NonFiniteError, NotOrthonormalError, SingularityError


class MatrixNorms(NamedTuple):
    op: float
    fro: float
    two_inf: float
    max: float


class Projection(NamedTuple):
    onto: np.ndarray
    complement: np.ndarray


class PartialEig(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def as_matrix(M, name="matrix"):
    """Validate a finite, non-empty 2-D array and return it as float64."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    if not np.isfinite(A).all():
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return A


def op_norm(A):
    """Largest singular value."""
    if A.shape[0] == A.shape[1] and A.shape[0] > 1 and np.array_equal(A, A.T):
        w = scipy.linalg.eigvalsh(A, check_finite=False)
        return float(max(abs(w[0]), abs(w[-1])))
    return float(np.linalg.norm(A, 2))


def lowrank_sym_op_norm(W, signs):
    """Operator norm of ``W diag(signs) W^T`` through the QR core ``R diag(signs) R^T``.

    Cheaper than a dense eigensolve whenever ``W`` has far fewer columns than rows.
    """
    W = np.asarray(W, dtype=float)
    if W.shape[1] >= W.shape[0]:
        A = (W * signs) @ W.T
        return op_norm((A + A.T) / 2.0)
    R = np.linalg.qr(W, mode="r")
    core = (R * signs) @ R.T
    w = scipy.linalg.eigvalsh((core + core.T) / 2.0, check_finite=False)
    return float(max(abs(w[0]), abs(w[-1])))


def two_inf_norm(A):
    """Largest Euclidean row norm, ``max_i ||A[i, :]||``."""
    return float(np.sqrt(np.max(np.einsum("ij,ij->i", A, A))))


def max_norm(A):
    return float(np.max(np.abs(A)))


def matrix_norms(M):
    """Operator, Frobenius, (2, inf) and max norms of ``M``."""
    A = as_matrix(M)
    return MatrixNorms(op=op_norm(A), fro=float(np.linalg.norm(A)), two_inf=two_inf_norm(A), max=max_norm(A))


def sigma_k(A, k):
    """k-th largest singular value (1-based); zero when ``k`` exceeds the rank dimension."""
    s = np.linalg.svd(A, compute_uv=False)
    return float(s[k - 1]) if k <= s.size else 0.0


def _sign_fix(U, Vt):
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, Vt * signs[:, None]


def svd(A):
    """Thin SVD ``A = U diag(s) Vt`` with the sign convention described above."""
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    U, Vt = _sign_fix(U, Vt)
    return U, s, Vt


def polar_orthonormalize(Z, tol=None):
    """Return ``Z (Z^T Z)^{-1/2}``, the orthonormal polar factor of ``Z``.

    Computed from the thin SVD ``Z = L S R^T`` as ``L R^T``.

    Raises
    ------
    SingularityError
        If ``sigma_min(Z) <= tol * sigma_max(Z)`` (default ``1e-12``).
    """
    Z = as_matrix(Z, "Z")
    if Z.shape[1] > Z.shape[0]:
        raise DimensionError(f"Z must be tall, got shape {Z.shape}")
    rel = constants.DEFAULT.rank_rel if tol is None else tol
    L, s, Rt = svd(Z)
    if s[0] == 0.0 or s[-1] <= rel * s[0]:
        raise SingularityError(
            f"Z is rank deficient: sigma_min={s[-1]:.3e}, sigma_max={s[0]:.3e}", sigma_min=float(s[-1])
        )
    return L @ Rt


def check_orthonormal(V, tol=None, name="V"):
    V = as_matrix(V, name)
    tol = constants.DEFAULT.ortho_abs if tol is None else tol
    k = V.shape[1]
    dev = float(np.linalg.norm(V.T @ V - np.eye(k)))
    if dev > tol:
        raise NotOrthonormalError(f"{name} is not orthonormal: ||V^T V - I||_F = {dev:.3e}")
    return V


def project(V, U):
    """Split ``U`` into its component in ``span(V)`` and the orthogonal rest."""
    V = as_matrix(V, "V")
    U = as_matrix(U, "U")
    if V.shape[0] != U.shape[0]:
        raise DimensionError(f"row counts differ: V has {V.shape[0]}, U has {U.shape[0]}")
    onto = V @ (V.T @ U)
    return Projection(onto=onto, complement=U - onto)


def procrustes_rotation(X, Y):
    """Orthogonal ``O`` minimizing ``||X - Y O||_F``."""
    L, _, Rt = svd(Y.T @ X)
    return L @ Rt


def procrustes_dist(X, Y):
    """``min_O ||X - Y O||_F`` over orthogonal ``O``."""
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape != Y.shape:
        raise DimensionError(f"shape mismatch: {X.shape} vs {Y.shape}")
    O = procrustes_rotation(X, Y)
    return float(np.linalg.norm(X - Y @ O))


def partial_eig_sym(A, k, tol=None):
    """Top-``k`` eigenpairs of a symmetric matrix ranked by ``|lambda|``.

    ``V diag(values) V^T`` is then the Frobenius-best rank-``k`` approximation
    of ``A`` (negative eigenvalues included).
    """
    A = as_matrix(A, "A")
    d = A.shape[0]
    if A.shape[1] != d:
        raise DimensionError(f"A must be square, got {A.shape}")
    if not 1 <= k <= d:
        raise DimensionError(f"k must lie in [1, {d}], got {k}")
    tol = constants.DEFAULT.sym_abs if tol is None else tol
    asym = max_norm(A - A.T)
    if asym > tol * max(1.0, max_norm(A)):
        raise AsymmetryError(f"A is not symmetric: max |A - A^T| = {asym:.3e}")
    w, Q = scipy.linalg.eigh((A + A.T) / 2.0)
    order = np.argsort(-np.abs(w), kind="stable")[:k]
    vecs = Q[:, order]
    vecs, _ = _sign_fix(vecs, np.zeros((k, 1)))
    return PartialEig(values=w[order], vectors=vecs)


def haar_orthogonal(rng, d, k):
    """Haar-distributed ``d x k`` orthonormal matrix (QR of a Gaussian, R's diagonal made positive)."""
    G = rng.standard_normal((d, k))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs
