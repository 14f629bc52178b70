import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import jacobi_eigenvalues, spectral_norm_oracle
from pacgnn.errors import NonConvergence
from pacgnn.linalg import (as_matrix, frobenius_norm, gaussian_matrix, matrix_from_json,
                           matrix_to_json, project_spectral_ball, project_spectral_ball_batch,
                           spectral_norm, spectral_norm_with_retry)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def mats(max_side=6):
    shapes = st.tuples(st.integers(1, max_side), st.integers(1, max_side))
    return shapes.flatmap(lambda s: arrays(np.float64, s, elements=finite))


def test_frobenius_examples():
    assert frobenius_norm(np.zeros((2, 2))) == 0
    assert frobenius_norm(np.eye(2)) == pytest.approx(math.sqrt(2))
    assert frobenius_norm([[1, 2], [3, 4]]) == pytest.approx(math.sqrt(30))


def test_spectral_examples():
    assert spectral_norm(np.eye(3)) == pytest.approx(1.0)
    assert spectral_norm(np.diag([3.0, 4.0])) == pytest.approx(4.0)
    assert spectral_norm(np.zeros((3, 2))) == 0.0


def test_spectral_matches_gram_eigen_oracle():
    rng = np.random.default_rng(3)
    m = rng.standard_normal((5, 4))
    assert spectral_norm(m) == pytest.approx(math.sqrt(jacobi_eigenvalues(m.T @ m)[-1]), rel=1e-9)


def test_jacobi_oracle_on_known_spectrum():
    q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((4, 4)))
    s = q @ np.diag([1.0, 2.0, 5.0, -3.0]) @ q.T
    assert jacobi_eigenvalues(s) == pytest.approx([-3.0, 1.0, 2.0, 5.0], abs=1e-12)


def test_start_vector_orthogonal_to_top_direction():
    # all-ones start is orthogonal to the top eigenvector (1, -1)
    m = np.array([[1.0, -1.0], [-1.0, 1.0]]) + 0.1 * np.eye(2)
    assert spectral_norm(m) == pytest.approx(2.1, rel=1e-9)


def test_nonconvergence_on_tiny_budget():
    m = np.diag([1.0, 0.999999, 0.5])
    with pytest.raises(NonConvergence):
        spectral_norm(m + 0.01, max_iter=2)


def test_retry_recovers_near_tie():
    rng = np.random.default_rng(11)
    q1, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    q2, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    m = q1 @ np.diag([1.3813, 1.38125, 0.98, 0.72, 0.39]) @ q2
    # a residual-based stop trades accuracy for a near-tie: error ~ tol / relative gap
    assert spectral_norm_with_retry(m) == pytest.approx(1.3813, rel=1e-5)


def test_bad_arguments():
    with pytest.raises(ValueError):
        spectral_norm(np.eye(2), tol=0)
    with pytest.raises(ValueError):
        as_matrix([[1.0, np.nan]])
    with pytest.raises(ValueError):
        project_spectral_ball(np.eye(2), -1)


def test_projection_examples():
    m = 0.5 * np.eye(2)
    assert np.array_equal(project_spectral_ball(m, 1.0), m)
    assert np.allclose(project_spectral_ball(np.diag([3.0, 1.0]), 2.0), np.diag([2.0, 1.0]))
    assert np.array_equal(project_spectral_ball(np.ones((2, 3)), 0.0), np.zeros((2, 3)))


def test_batch_projection_matches_single():
    rng = np.random.default_rng(5)
    stack = rng.standard_normal((7, 4, 3))
    out = project_spectral_ball_batch(stack, 0.8)
    for k in range(7):
        assert np.allclose(out[k], project_spectral_ball(stack[k], 0.8), atol=1e-14)


def test_gaussian_matrix():
    assert np.array_equal(gaussian_matrix(3, 2, 0.0, 1), np.zeros((3, 2)))
    assert np.array_equal(gaussian_matrix(3, 2, 1.5, 7), gaussian_matrix(3, 2, 1.5, 7))
    big = gaussian_matrix(1000, 100, 2.0, 0)
    assert abs(big.var() / 4.0 - 1) < 0.02


def test_json_roundtrip():
    m = np.arange(6.0).reshape(2, 3)
    obj = matrix_to_json(m)
    assert obj == {"rows": 2, "cols": 3, "data": [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]}
    assert np.array_equal(matrix_from_json(obj), m)
    with pytest.raises(ValueError):
        matrix_from_json({"rows": 2, "cols": 2, "data": [1.0]})


def pairs(max_side=6):
    dims = st.tuples(*(st.integers(1, max_side) for _ in range(3)))
    return dims.flatmap(lambda d: st.tuples(arrays(np.float64, (d[0], d[1]), elements=finite),
                                            arrays(np.float64, (d[1], d[2]), elements=finite)))


@settings(max_examples=60, deadline=None)
@given(pairs())
def test_submultiplicative_and_frobenius_product(ab):
    a, b = ab
    na, nb = spectral_norm_with_retry(a), spectral_norm_with_retry(b)
    assert spectral_norm_with_retry(a @ b) <= na * nb * (1 + 1e-9) + 1e-9
    assert frobenius_norm(a @ b) <= frobenius_norm(a) * nb * (1 + 1e-9) + 1e-9


@settings(max_examples=80, deadline=None)
@given(mats())
def test_spectral_below_frobenius(m):
    assert spectral_norm_with_retry(m) <= frobenius_norm(m) + 1e-9


@settings(max_examples=60, deadline=None)
@given(mats(), st.floats(0.01, 5))
def test_projection_properties(m, r):
    p = project_spectral_ball(m, r)
    assert np.linalg.norm(p, 2) <= r * (1 + 1e-9)
    assert np.array_equal(project_spectral_ball(p, r), p)
    # non-expansive: never farther from the input than the zero matrix is
    assert frobenius_norm(m - p) <= frobenius_norm(m) + 1e-12


def test_projection_is_nearest_point():
    rng = np.random.default_rng(9)
    m = rng.standard_normal((4, 3)) * 3
    p = project_spectral_ball(m, 1.0)
    for _ in range(200):
        cand = project_spectral_ball(p + 0.1 * rng.standard_normal((4, 3)), 1.0)
        assert frobenius_norm(m - p) <= frobenius_norm(m - cand) + 1e-12


def test_spectral_norm_against_eigen_oracle_up_to_16():
    rng = np.random.default_rng(2024)
    for _ in range(40):
        r, c = rng.integers(1, 17, size=2)
        m = rng.standard_normal((r, c))
        assert spectral_norm_with_retry(m) == pytest.approx(spectral_norm_oracle(m), rel=1e-7)
