"""Pure-python threshold-scan kernel.

One call scans a single feature of one node. Rows arrive sorted by the split
feature in descending order, so the prefix of length m is exactly the sample
set {psi >= t} induced by a threshold between positions m-1 and m. A forward
accumulator grows the prefix side one row at a time and a backward accumulator
grows the complement from the other end; each maintains the inverse of
lam*I + X^T X through rank-one updates so every loss evaluation costs O(d^2).

Strategy codes: 0 no pruning, 1 exact, 2 approx-min, 3 approx-max. The exact
bound l(k) + r(N-k) is a true lower bound for every total in the middle of the
scan (losses only grow with sample count), so pruning with a strict comparison
never discards a candidate that could still win or tie. The approx bounds are
the endpoint extrapolations; they may overshoot and are heuristics by design.

`backend_name` identifies which kernel implementation is active.
"""

import numpy as np

from ..errors import DenominatorUnderflow

backend_name = "python"

STRAT_NONE = 0
STRAT_EXACT = 1
STRAT_APPROX_MIN = 2
STRAT_APPROX_MAX = 3

_SYM_EVERY = 256
_DENOM_FLOOR = 1e-14
_PIVOT_REL = 1e-12


def cholesky_threshold(S):
    """Lower Cholesky factor of S, or None if a pivot falls below the
    relative threshold. Used to decide when a lam=0 scan becomes solvable."""
    d = S.shape[0]
    max_diag = 0.0
    for j in range(d):
        if S[j, j] > max_diag:
            max_diag = S[j, j]
    thr = _PIVOT_REL * max(max_diag, 1e-300)
    L = np.zeros((d, d))
    for j in range(d):
        s = S[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if s <= thr:
            return None
        L[j, j] = np.sqrt(s)
        for i in range(j + 1, d):
            v = S[i, j]
            for k in range(j):
                v -= L[i, k] * L[j, k]
            L[i, j] = v / L[j, j]
    return L


def _inverse_from_cholesky(L):
    d = L.shape[0]
    # forward-substitute L Linv = I column by column, then inv = Linv^T Linv
    Linv = np.zeros((d, d))
    for j in range(d):
        Linv[j, j] = 1.0 / L[j, j]
        for i in range(j + 1, d):
            s = 0.0
            for k in range(j, i):
                s -= L[i, k] * Linv[k, j]
            Linv[i, j] = s / L[i, i]
    return Linv.T @ Linv


class _Accumulator:
    """One scan direction: sufficient statistics plus the maintained inverse."""

    def __init__(self, d, lam, w0):
        self.d = d
        self.lam = lam
        self.w0 = w0
        self.bq = lam * w0
        self.c = 0.0
        self.base = lam * float(w0 @ w0)
        self.updates = 0
        if lam > 0.0:
            self.inv = np.eye(d) / lam
            self.S = None
        else:
            self.inv = None
            self.S = np.zeros((d, d))

    def add(self, x, y):
        if self.inv is not None:
            u = self.inv @ x
            denom = 1.0 + float(x @ u)
            if denom <= _DENOM_FLOOR:
                raise DenominatorUnderflow(
                    f"scan update denominator {denom:.3e}"
                )
            self.inv -= (1.0 / denom) * np.outer(u, u)
            self.updates += 1
            if self.updates % _SYM_EVERY == 0:
                self.inv = (self.inv + self.inv.T) * 0.5
        else:
            self.S += np.outer(x, x)
        self.bq = self.bq + x * y
        self.c += y * y

    def evaluate(self, want_penalty):
        """Return (loss, penalty) of the side fitted on the rows added so far.

        NaNs signal an unsolvable system (lam = 0 before the accumulated
        matrix becomes positive definite).
        """
        if self.inv is None:
            L = cholesky_threshold(self.S)
            if L is None:
                return np.nan, np.nan
            self.inv = _inverse_from_cholesky(L)
            self.S = None
        w = self.inv @ self.bq
        loss = self.c + self.base - float(self.bq @ w)
        if loss < 0.0:
            loss = 0.0
        penalty = 0.0
        if want_penalty:
            dw = w - self.w0
            penalty = self.lam * float(dw @ dw)
        return loss, penalty


def _bound(strategy, l_k, r_k, pl, pr, N, k, per_sample):
    if strategy == STRAT_EXACT:
        return l_k + r_k
    dl = l_k - pl
    dr = r_k - pr
    if per_sample:
        dl /= k
        dr /= N - k
    extra = min(dl, dr) if strategy == STRAT_APPROX_MIN else max(dl, dr)
    return l_k + r_k + (N - 2 * k) * extra


def scan_feature(Xs, Ys, splittable, lam, w0, min_leaf, strategy,
                 per_sample_norm, seed_threshold, out_l, out_r):
    """Scan every admissible threshold of one pre-sorted feature.

    out_l[m] receives the loss of the m-row prefix and out_r[s] the loss of
    the s-row suffix; entries stay NaN where no evaluation happened. Returns
    (best_m, best_total, scanned, pruned) where best_m = 0 means no candidate
    was assembled. Candidate totals are compared with strict <, ties keep the
    smaller threshold rank.
    """
    N, d = Xs.shape
    fwd = _Accumulator(d, lam, w0)
    bwd = _Accumulator(d, lam, w0)
    lo = min_leaf
    hi = N - min_leaf
    want_penalty = strategy >= STRAT_APPROX_MIN
    check_pruning = strategy != STRAT_NONE
    prune_k = 0
    last_pl = 0.0
    last_pr = 0.0
    best_m = 0
    best_total = np.inf
    scanned = 0
    pruned = 0
    half = (N + 1) // 2

    for k in range(1, N):
        fwd.add(Xs[k - 1], Ys[k - 1])
        bwd.add(Xs[N - k], Ys[N - k])
        if lo <= k <= hi:
            skip = prune_k > 0 and prune_k < k <= N - prune_k
            if not skip:
                loss, pen = fwd.evaluate(want_penalty)
                out_l[k] = loss
                last_pl = pen
                loss, pen = bwd.evaluate(want_penalty)
                out_r[k] = loss
                last_pr = pen
        if check_pruning and prune_k == 0 and 2 * k <= N:
            l_k = out_l[k]
            r_k = out_r[k]
            if not (np.isnan(l_k) or np.isnan(r_k)):
                bound = _bound(strategy, l_k, r_k, last_pl, last_pr, N, k,
                               per_sample_norm)
                if bound > seed_threshold:
                    prune_k = k
        if k >= half:
            p_low = N - k
            for p in ((p_low, k) if p_low != k else (k,)):
                if not splittable[p]:
                    continue
                if prune_k > 0 and prune_k <= p <= N - prune_k:
                    pruned += 1
                    continue
                l_val = out_l[p]
                r_val = out_r[N - p]
                if np.isnan(l_val) or np.isnan(r_val):
                    continue
                total = l_val + r_val
                scanned += 1
                if total < best_total or (total == best_total and p < best_m):
                    best_total = total
                    best_m = p
    return best_m, best_total, scanned, pruned
