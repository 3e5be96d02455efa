"""Penalized linear regression solvers.

Anchored ridge has the closed form w = (X^T P X + lam Q)^{-1} (X^T P Y + lam Q w0)
with diagonal sample weights P and coordinate weights Q. Its optimal loss is
evaluated in O(d) from the sufficient statistics instead of re-touching the
rows. Lasso leaves are refit by cyclic coordinate descent.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence
from .linalg import spd_solve


@dataclass
class RidgeProblem:
    """Weighted ridge instance min ||X w - Y||^2_P + lam ||w - w0||^2_Q.

    P and Q are diagonal and given as 1-d arrays of nonnegative weights;
    None means all ones. w0 is the anchor the penalty pulls toward; None
    means the zero vector.
    """

    X: np.ndarray
    Y: np.ndarray
    lam: float
    w0: np.ndarray | None = None
    P: np.ndarray | None = None
    Q: np.ndarray | None = None


@dataclass
class FitResult:
    w: np.ndarray
    loss: float


def append_bias(X):
    """Return X with a constant all-ones column appended (bias is the last column)."""
    X = np.asarray(X, dtype=np.float64)
    return np.hstack((X, np.ones((X.shape[0], 1))))


def ridge_fit(problem):
    """Solve a RidgeProblem exactly through the normal equations.

    The returned loss is computed by the identity
        loss = c + lam w0^T Q w0 - (b + lam Q w0)^T w
    with S = X^T P X, b = X^T P Y, c = Y^T P Y, which follows from
    (S + lam Q) w = b + lam Q w0 and costs O(d) given w. Round-off can push
    the identity a hair negative on exactly-fit data, so the result is
    clamped at zero.
    """
    X = np.asarray(problem.X, dtype=np.float64)
    Y = np.asarray(problem.Y, dtype=np.float64)
    n, d = X.shape
    lam = float(problem.lam)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    w0 = np.zeros(d) if problem.w0 is None else np.asarray(problem.w0, dtype=np.float64)
    q = np.ones(d) if problem.Q is None else np.asarray(problem.Q, dtype=np.float64)
    if problem.P is None:
        S = X.T @ X
        b = X.T @ Y
        c = float(Y @ Y)
    else:
        p = np.asarray(problem.P, dtype=np.float64)
        Xp = X * p[:, None]
        S = X.T @ Xp
        b = Xp.T @ Y
        c = float(Y @ (p * Y))
    m = S
    m[np.diag_indices(d)] += lam * q
    rhs = b + lam * (q * w0)
    w = spd_solve(m, rhs)
    loss = c + lam * float(w0 @ (q * w0)) - float(rhs @ w)
    return FitResult(w=w, loss=max(loss, 0.0))


def ridge_objective(problem, w):
    """Directly summed objective ||X w - Y||^2_P + lam ||w - w0||^2_Q at any w."""
    X = np.asarray(problem.X, dtype=np.float64)
    Y = np.asarray(problem.Y, dtype=np.float64)
    d = X.shape[1]
    w = np.asarray(w, dtype=np.float64)
    w0 = np.zeros(d) if problem.w0 is None else np.asarray(problem.w0, dtype=np.float64)
    q = np.ones(d) if problem.Q is None else np.asarray(problem.Q, dtype=np.float64)
    r = X @ w - Y
    if problem.P is None:
        data_term = float(r @ r)
    else:
        p = np.asarray(problem.P, dtype=np.float64)
        data_term = float(r @ (p * r))
    dw = w - w0
    return data_term + float(problem.lam) * float(dw @ (q * dw))


def _soft_threshold(value, cut):
    mag = abs(value) - cut
    if mag <= 0.0:
        return 0.0
    return math.copysign(mag, value)


def lasso_fit(X, Y, lam, tol=1e-8, max_iter=10000, w_init=None, penalize=None):
    """Minimize ||X w - Y||^2 + lam * sum_i |w_i| over the penalized coordinates.

    Cyclic coordinate descent; each coordinate update is the exact scalar
    minimizer soft(x_i^T rho_i, lam/2) / ||x_i||^2 where rho_i is the partial
    residual. `penalize` is a boolean mask selecting which coordinates carry
    the l1 penalty (default all); unpenalized coordinates get the plain
    least-squares update. Coordinates whose column is identically zero are
    set to zero when penalized and left at their initial value otherwise.
    Stops when the largest coordinate change in a sweep is at most tol;
    issues NoConvergence and returns the last iterate if max_iter sweeps
    were not enough.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    n, d = X.shape
    lam = float(lam)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if penalize is None:
        penalize = np.ones(d, dtype=bool)
    else:
        penalize = np.asarray(penalize, dtype=bool)
    w = np.zeros(d) if w_init is None else np.array(w_init, dtype=np.float64)
    col_sq = np.einsum("ij,ij->j", X, X)
    active = col_sq > 0.0
    w[~active & penalize] = 0.0
    r = Y - X @ w
    half = 0.5 * lam
    converged = False
    for _ in range(max_iter):
        max_change = 0.0
        for i in range(d):
            if not active[i]:
                continue
            xi = X[:, i]
            rho = float(xi @ r) + col_sq[i] * w[i]
            if penalize[i]:
                wi = _soft_threshold(rho, half) / col_sq[i]
            else:
                wi = rho / col_sq[i]
            delta = wi - w[i]
            if delta != 0.0:
                r -= delta * xi
                w[i] = wi
                change = abs(delta)
                if change > max_change:
                    max_change = change
        if max_change <= tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"coordinate descent did not reach tol={tol:g} in {max_iter} sweeps",
            NoConvergence,
            stacklevel=2,
        )
    loss = float(r @ r) + lam * float(np.abs(w[penalize]).sum())
    return FitResult(w=w, loss=loss)
