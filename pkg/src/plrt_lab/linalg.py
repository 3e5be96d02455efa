"""Dense SPD linear algebra: solve, incremental inverse updates, spectral norm.

Matrices are plain float64 numpy arrays assumed symmetric positive (semi)definite.
The inverse of a growing SPD matrix is maintained explicitly through rank-one
updates so that a threshold scan can evaluate one regression per step in O(d^2).
"""

import warnings

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DenominatorUnderflow, NoConvergence, NotPositiveDefinite

SYMMETRIZE_EVERY = 256
DENOM_FLOOR = 1e-14


def spd_solve(m, rhs):
    """Solve m @ w = rhs for SPD m via Cholesky factorization.

    Raises NotPositiveDefinite when the factorization hits a non-positive
    pivot, which is how rank-deficient data surfaces when the ridge
    parameter is zero.
    """
    m = np.asarray(m, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    try:
        factor = cho_factor(m, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    return cho_solve(factor, rhs, check_finite=False)


def spd_inverse(m):
    """Invert an SPD matrix via Cholesky; the result is explicitly symmetrized."""
    m = np.asarray(m, dtype=np.float64)
    try:
        factor = cho_factor(m, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    inv = cho_solve(factor, np.eye(m.shape[0]), check_finite=False)
    return (inv + inv.T) * 0.5


class InverseState:
    """Explicit inverse of an accumulated SPD matrix plus an update counter.

    The state is owned by a single scan; updates mutate it in place. Every
    SYMMETRIZE_EVERY updates the inverse is re-symmetrized to suppress
    asymmetric round-off drift.
    """

    __slots__ = ("dim", "inv", "updates_applied")

    def __init__(self, inv, updates_applied=0):
        inv = np.array(inv, dtype=np.float64)
        if inv.ndim != 2 or inv.shape[0] != inv.shape[1]:
            raise ValueError("inverse must be a square matrix")
        self.dim = inv.shape[0]
        self.inv = inv
        self.updates_applied = int(updates_applied)

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim))

    @classmethod
    def of_matrix(cls, m):
        """Start from the inverse of an explicit SPD matrix."""
        return cls(spd_inverse(m))

    def copy(self):
        return InverseState(self.inv, self.updates_applied)


def rank_one_update(state, x, beta):
    """Apply the Sherman-Morrison update inv((M + beta x x^T)) in place.

    Given state.inv == inv(M) for SPD M and beta >= 0, subtracts
    beta (inv x)(inv x)^T / (1 + beta x^T inv x). Raises DenominatorUnderflow
    when the denominator falls to DENOM_FLOOR or below, which cannot happen
    in exact arithmetic for SPD M and signals catastrophic conditioning.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    u = state.inv @ x
    denom = 1.0 + beta * float(x @ u)
    if denom <= DENOM_FLOOR:
        raise DenominatorUnderflow(
            f"rank-one update denominator {denom:.3e} at update {state.updates_applied + 1}"
        )
    if beta != 0.0:
        state.inv -= (beta / denom) * np.outer(u, u)
    state.updates_applied += 1
    if state.updates_applied % SYMMETRIZE_EVERY == 0:
        state.inv += state.inv.T
        state.inv *= 0.5
    return state


def _power_phase(m, v, tol, max_iter):
    """Run power iteration from a unit start vector.

    Returns (estimate, converged, iterations). The Rayleigh quotient of the
    iterates is nondecreasing for PSD matrices, so the last value is the best
    one seen in this phase. A zero image means the start vector sits in the
    nullspace and the phase reports 0.
    """
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = m @ v
        lam_new = float(v @ w)
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return 0.0, True, it
        v = w / nrm
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
            return lam_new, True, it
        lam = lam_new
    return lam, False, max_iter


def operator_norm(m, tol=1e-9, max_iter=10000):
    """Largest eigenvalue of a symmetric PSD matrix by deterministic power iteration.

    The first phase starts from the normalized all-ones vector. A second
    phase restarts from the basis vector of the largest diagonal entry, which
    recovers the top eigenspace whenever the all-ones start is (numerically)
    orthogonal to it; for PSD matrices the spectral norm is never below the
    largest diagonal entry, so the larger phase estimate wins. If the winning
    phase hit max_iter without meeting tol, a NoConvergence warning is issued
    and the best iterate is returned.
    """
    m = np.asarray(m, dtype=np.float64)
    d = m.shape[0]
    if not m.any():
        return 0.0
    v0 = np.full(d, 1.0 / np.sqrt(d))
    lam_a, ok_a, _ = _power_phase(m, v0, tol, max_iter)
    e = np.zeros(d)
    e[int(np.argmax(np.diag(m)))] = 1.0
    lam_b, ok_b, _ = _power_phase(m, e, tol, max_iter)
    if lam_b > lam_a:
        lam, ok = lam_b, ok_b
    else:
        lam, ok = lam_a, ok_a
    if not ok:
        warnings.warn(
            f"power iteration did not reach tol={tol:g} within {max_iter} iterations",
            NoConvergence,
            stacklevel=2,
        )
    return max(lam, 0.0)


def condition_number(m, tol=1e-9, max_iter=10000):
    """Spectral condition number of an SPD matrix: ||m||_op * ||inv(m)||_op."""
    return operator_norm(m, tol, max_iter) * operator_norm(spd_inverse(m), tol, max_iter)
