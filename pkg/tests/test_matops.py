import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mc_implicit.errors import AsymmetryError, DimensionError, NonFiniteError, SingularityError
from mc_implicit.matops import (check_orthonormal, haar_orthogonal, lowrank_sym_op_norm, matrix_norms,
                                max_norm, partial_eig_sym, polar_orthonormalize, procrustes_dist,
                                procrustes_rotation, project, sigma_k, two_inf_norm)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def gaussian(seed, *shape):
    return np.random.default_rng(seed).standard_normal(shape)


def test_norms_of_identity():
    n = matrix_norms(np.eye(2))
    assert n.op == pytest.approx(1.0)
    assert n.fro == pytest.approx(np.sqrt(2))
    assert n.two_inf == 1.0
    assert n.max == 1.0


def test_two_inf_picks_the_345_row():
    assert matrix_norms([[3, 4], [0, 0]]).two_inf == pytest.approx(5.0)


def test_norms_against_singular_values():
    M = gaussian(0, 5, 3)
    s = np.linalg.svd(M, compute_uv=False)
    n = matrix_norms(M)
    assert n.op == pytest.approx(s[0], rel=1e-12)
    assert n.fro == pytest.approx(np.sqrt(np.sum(s ** 2)), rel=1e-12)
    assert n.op <= n.fro <= np.sqrt(3) * n.op + 1e-12
    assert n.two_inf <= n.op + 1e-12


def test_norms_reject_empty_and_nonfinite():
    with pytest.raises(DimensionError):
        matrix_norms(np.zeros((0, 3)))
    with pytest.raises(NonFiniteError):
        matrix_norms([[1.0, np.nan]])


@given(arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite))
def test_norm_orderings(M):
    n = matrix_norms(M)
    assert min(n) >= 0
    assert n.max <= n.two_inf + 1e-12
    assert n.two_inf <= n.op * (1 + 1e-10) + 1e-12
    assert n.op <= n.fro * (1 + 1e-10) + 1e-12


def test_polar_fixes_orthonormal_input():
    Q = haar_orthogonal(np.random.default_rng(1), 6, 3)
    np.testing.assert_allclose(polar_orthonormalize(Q), Q, atol=1e-12)


def test_polar_cancels_positive_scaling():
    np.testing.assert_allclose(polar_orthonormalize(2 * np.eye(3)), np.eye(3), atol=1e-15)


def test_polar_diagonal_case():
    Z = np.array([[3.0, 0.0], [0.0, 0.0], [0.0, 4.0]])
    np.testing.assert_allclose(polar_orthonormalize(Z), [[1, 0], [0, 0], [0, 1]], atol=1e-15)


def test_polar_singular_names_sigma_min():
    with pytest.raises(SingularityError, match="sigma_min") as info:
        polar_orthonormalize(np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]]))
    assert info.value.sigma_min < 1e-12


@given(st.integers(0, 10_000), st.integers(2, 7), st.integers(1, 4))
def test_polar_orthonormal_and_span_preserving(seed, d, k):
    k = min(k, d)
    Z = gaussian(seed, d, k)
    V = polar_orthonormalize(Z)
    assert np.linalg.norm(V.T @ V - np.eye(k)) <= 1e-10
    np.testing.assert_allclose(V @ (V.T @ Z), Z, atol=1e-8 * np.linalg.norm(Z, 2))


def test_project_hand_example():
    V = np.array([[1.0], [0.0]])
    P = project(V, [[1, 2], [3, 4]])
    np.testing.assert_array_equal(P.onto, [[1, 2], [0, 0]])
    np.testing.assert_array_equal(P.complement, [[0, 0], [3, 4]])


def test_project_inside_span_has_no_complement():
    V = haar_orthogonal(np.random.default_rng(2), 5, 2)
    P = project(V, V @ gaussian(3, 2, 4))
    assert np.abs(P.complement).max() < 1e-12


def test_project_row_mismatch():
    with pytest.raises(DimensionError):
        project(np.eye(3)[:, :1], np.ones((2, 2)))


@given(st.integers(0, 10_000), st.integers(2, 8), st.integers(1, 5))
def test_project_pythagoras(seed, d, k):
    gen = np.random.default_rng(seed)
    V = haar_orthogonal(gen, d, min(k, d))
    U = gen.standard_normal((d, 3))
    P = project(V, U)
    # complement is U - onto, so the sum recovers U up to one rounding per entry
    np.testing.assert_allclose(P.onto + P.complement, U, rtol=0, atol=4 * np.finfo(float).eps * np.abs(U).max())
    assert np.linalg.norm(P.onto) ** 2 + np.linalg.norm(P.complement) ** 2 == pytest.approx(
        np.linalg.norm(U) ** 2, abs=1e-10)
    assert np.abs(V.T @ P.complement).max() < 1e-10 * max(1.0, np.linalg.norm(U))


def test_procrustes_examples():
    X = gaussian(4, 5, 2)
    O = haar_orthogonal(np.random.default_rng(5), 2, 2)
    assert procrustes_dist(X, X) == pytest.approx(0, abs=1e-12)
    assert procrustes_dist(X, X @ O) == pytest.approx(0, abs=1e-12)
    assert procrustes_dist([[2, 0], [0, 0]], [[1, 0], [0, 0]]) == pytest.approx(1.0)


def test_procrustes_shape_mismatch():
    with pytest.raises(DimensionError):
        procrustes_dist(np.ones((3, 2)), np.ones((2, 2)))


@given(st.integers(0, 10_000))
def test_procrustes_below_plain_distance_and_grid_search(seed):
    gen = np.random.default_rng(seed)
    X, Y = gen.standard_normal((4, 2)), gen.standard_normal((4, 2))
    dist = procrustes_dist(X, Y)
    assert 0 <= dist <= np.linalg.norm(X - Y) + 1e-12
    # brute force over 2x2 rotations and reflections
    th = np.linspace(0, 2 * np.pi, 2001)
    best = np.inf
    for refl in (1.0, -1.0):
        for a in th:
            O = np.array([[np.cos(a), -refl * np.sin(a)], [np.sin(a), refl * np.cos(a)]])
            best = min(best, np.linalg.norm(X - Y @ O))
    assert dist <= best + 1e-12
    assert best - dist < 1e-2 * max(1.0, np.linalg.norm(X))


def test_procrustes_rotation_is_orthogonal():
    O = procrustes_rotation(gaussian(6, 5, 3), gaussian(7, 5, 3))
    np.testing.assert_allclose(O.T @ O, np.eye(3), atol=1e-12)


def test_partial_eig_magnitude_ranking():
    pe = partial_eig_sym(np.diag([3.0, 1.0, -2.0]), 2)
    np.testing.assert_allclose(pe.values, [3.0, -2.0])


def test_partial_eig_rank_one():
    v = np.array([1.0, -2.0, 2.0])
    pe = partial_eig_sym(np.outer(v, v), 1)
    assert pe.values[0] == pytest.approx(9.0)
    np.testing.assert_allclose(np.abs(pe.vectors[:, 0]), np.abs(v) / 3, atol=1e-12)


def test_partial_eig_matches_eckart_young():
    A = gaussian(8, 6, 6)
    A = A + A.T
    pe = partial_eig_sym(A, 3)
    resid = np.linalg.norm(A - (pe.vectors * pe.values) @ pe.vectors.T) ** 2
    w = np.linalg.eigvalsh(A)
    tail = np.sort(np.abs(w))[:3]
    assert resid == pytest.approx(np.sum(tail ** 2), rel=1e-10)


def test_partial_eig_rejects_asymmetric_and_bad_k():
    with pytest.raises(AsymmetryError):
        partial_eig_sym(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)
    with pytest.raises(DimensionError):
        partial_eig_sym(np.eye(3), 4)


@given(st.integers(0, 10_000))
def test_two_inf_submultiplicative(seed):
    gen = np.random.default_rng(seed)
    A, B = gen.standard_normal((6, 4)), gen.standard_normal((4, 3))
    assert two_inf_norm(A @ B) <= two_inf_norm(A) * np.linalg.norm(B, 2) * (1 + 1e-12)


@given(st.integers(0, 10_000), st.integers(3, 8), st.integers(1, 3))
def test_projector_difference_bound(seed, d, k):
    gen = np.random.default_rng(seed)
    V1, V2 = haar_orthogonal(gen, d, k), haar_orthogonal(gen, d, k)
    D = V1 @ V1.T - V2 @ V2.T
    assert np.linalg.norm(D, 2) <= 2 * np.linalg.norm(V1 - V2, 2) + 1e-12
    assert np.linalg.norm(D) <= 2 * np.linalg.norm(V1 - V2) + 1e-12


@given(st.integers(0, 10_000))
def test_sigma_r_of_product_lower_bound(seed):
    gen = np.random.default_rng(seed)
    A, B = gen.standard_normal((3, 3)), gen.standard_normal((3, 5))
    assert sigma_k(A @ B, 3) >= sigma_k(A, 3) * sigma_k(B, 3) * (1 - 1e-10)


@given(st.integers(0, 10_000))
def test_procrustes_vs_gram_difference(seed):
    gen = np.random.default_rng(seed)
    X, Y = gen.standard_normal((6, 2)), gen.standard_normal((6, 2))
    lhs = procrustes_dist(X, Y) ** 2
    rhs = np.linalg.norm(X @ X.T - Y @ Y.T) ** 2 / (2 * (np.sqrt(2) - 1) * sigma_k(X, 2) ** 2)
    assert lhs <= rhs * (1 + 1e-10)


@given(st.integers(0, 10_000))
def test_max_norm_factorization(seed):
    gen = np.random.default_rng(seed)
    U = haar_orthogonal(gen, 7, 3)
    V = haar_orthogonal(gen, 5, 3)
    S = np.diag(gen.uniform(0.1, 3.0, 3))
    assert max_norm(U @ S @ V.T) <= np.linalg.norm(S, 2) * two_inf_norm(U) * two_inf_norm(V) * (1 + 1e-12)


@given(st.integers(0, 10_000), st.integers(4, 9), st.integers(1, 3), st.integers(1, 3))
def test_lowrank_op_norm_matches_dense(seed, d, a, b):
    gen = np.random.default_rng(seed)
    W = gen.standard_normal((d, a + b))
    signs = np.r_[np.ones(a), -np.ones(b)]
    dense = np.linalg.norm((W * signs) @ W.T, 2)
    assert lowrank_sym_op_norm(W, signs) == pytest.approx(dense, rel=1e-10, abs=1e-12)


def test_check_orthonormal():
    check_orthonormal(np.eye(3)[:, :2])
    with pytest.raises(ValueError):
        check_orthonormal(2 * np.eye(3))
