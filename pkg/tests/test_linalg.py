import numpy as np
import pytest

from plrt_lab.errors import DenominatorUnderflow, NotPositiveDefinite
from plrt_lab.linalg import (InverseState, condition_number, operator_norm,
                             rank_one_update, spd_inverse, spd_solve)


def random_spd(rng, d, jitter=0.5):
    a = rng.standard_normal((d, d))
    return a @ a.T + jitter * np.eye(d)


def test_spd_solve_matches_numpy_on_random_systems():
    rng = np.random.default_rng(0)
    for _ in range(40):
        d = int(rng.integers(1, 9))
        m = random_spd(rng, d)
        rhs = rng.standard_normal(d)
        got = spd_solve(m, rhs)
        want = np.linalg.solve(m, rhs)
        assert np.allclose(got, want, rtol=1e-9, atol=1e-12)


def test_spd_solve_rejects_indefinite_matrix():
    m = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3 and -1
    with pytest.raises(NotPositiveDefinite):
        spd_solve(m, np.ones(2))


def test_spd_inverse_is_symmetric_two_sided_inverse():
    rng = np.random.default_rng(1)
    for _ in range(20):
        d = int(rng.integers(1, 7))
        m = random_spd(rng, d)
        inv = spd_inverse(m)
        assert np.allclose(inv @ m, np.eye(d), atol=1e-8)
        assert np.array_equal(inv, inv.T)


def test_rank_one_update_tracks_fresh_inverse():
    """A long chain of updates stays close to the from-scratch inverse."""
    rng = np.random.default_rng(2)
    d = 6
    state = InverseState.identity(d)
    m = np.eye(d)
    for i in range(300):
        x = rng.standard_normal(d)
        beta = float(rng.uniform(0.1, 2.0))
        rank_one_update(state, x, beta)
        m += beta * np.outer(x, x)
    fresh = np.linalg.inv(m)
    assert np.allclose(state.inv, fresh, rtol=1e-8, atol=1e-10)
    assert state.updates_applied == 300


def test_rank_one_update_beta_zero_is_identity_op():
    state = InverseState.of_matrix(np.diag([2.0, 4.0]))
    before = state.inv.copy()
    rank_one_update(state, np.array([1.0, 1.0]), 0.0)
    assert np.array_equal(state.inv, before)
    assert state.updates_applied == 1


def test_rank_one_update_rejects_negative_beta():
    state = InverseState.identity(2)
    with pytest.raises(ValueError):
        rank_one_update(state, np.ones(2), -1.0)


def test_rank_one_update_guards_denominator():
    # state around a non-PD "inverse" forces 1 + x^T inv x to zero
    state = InverseState(np.array([[-1.0]]))
    with pytest.raises(DenominatorUnderflow):
        rank_one_update(state, np.array([1.0]), 1.0)


def test_operator_norm_on_known_matrices():
    assert operator_norm(np.zeros((3, 3))) == 0.0
    assert operator_norm(np.eye(4)) == pytest.approx(1.0, rel=1e-9)
    assert operator_norm(np.diag([3.0, 1.0, 0.5])) == pytest.approx(3.0, rel=1e-9)
    # [[2,1],[1,2]] has eigenvalues 3 and 1
    m = np.array([[2.0, 1.0], [1.0, 2.0]])
    assert operator_norm(m) == pytest.approx(3.0, rel=1e-9)


def test_operator_norm_of_rank_one_is_squared_length():
    rng = np.random.default_rng(3)
    for _ in range(10):
        u = rng.standard_normal(5)
        m = np.outer(u, u)
        assert operator_norm(m) == pytest.approx(float(u @ u), rel=1e-8)


def test_operator_norm_matches_dense_spectral_norm():
    rng = np.random.default_rng(4)
    for _ in range(25):
        d = int(rng.integers(2, 10))
        m = random_spd(rng, d, jitter=0.0)
        want = float(np.linalg.norm(m, 2))
        assert operator_norm(m) == pytest.approx(want, rel=1e-7)


def test_condition_number_diagonal_and_identity():
    assert condition_number(np.eye(3)) == pytest.approx(1.0, rel=1e-8)
    assert condition_number(np.diag([4.0, 1.0])) == pytest.approx(4.0, rel=1e-8)


def test_condition_number_at_least_one():
    rng = np.random.default_rng(5)
    for _ in range(15):
        d = int(rng.integers(1, 7))
        m = random_spd(rng, d)
        assert condition_number(m) >= 1.0 - 1e-12
