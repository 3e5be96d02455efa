"""Exact split search over one node's samples.

For every split feature the thresholds are visited in sorted order while two
accumulators grow the two candidate sides incrementally, so the best pair
(feature, threshold) under the penalized two-model loss is found without ever
refitting from scratch. Four pruning strategies control how aggressively the
middle of each scan is skipped once its losses cannot (or heuristically will
not) beat the best total seen so far.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _scan
from .regress import FitResult, RidgeProblem, ridge_fit, ridge_objective


class Strategy(Enum):
    NO_SPEEDUP = "none"
    EXACT = "exact"
    APPROX_MIN = "approx-min"
    APPROX_MAX = "approx-max"

    @property
    def code(self):
        return _STRATEGY_CODES[self]


_STRATEGY_CODES = {
    Strategy.NO_SPEEDUP: _scan.STRAT_NONE,
    Strategy.EXACT: _scan.STRAT_EXACT,
    Strategy.APPROX_MIN: _scan.STRAT_APPROX_MIN,
    Strategy.APPROX_MAX: _scan.STRAT_APPROX_MAX,
}


@dataclass
class SplitConfig:
    """Knobs of the per-node split search.

    Ties on the total loss always resolve lexicographically on the feature
    index and then the threshold rank, so training is deterministic. The
    exact strategy propagates the best total across feature scans only when
    threads == 1; with more threads, and always for the approx strategies,
    every scan prunes against the node seed alone so that the trained model
    never depends on scheduling.
    """

    strategy: Strategy = Strategy.EXACT
    per_sample_normalization: bool = True
    min_leaf_size: int = 1
    threads: int = 1


@dataclass
class NodeContext:
    """Everything the split search needs to know about one node.

    prune_seed is the loss the node would keep by not splitting; when given,
    scans prune intervals whose bound exceeds it even before any candidate
    has been assembled. None disables seeding (the search is then exhaustive
    for the exact strategy regardless of how bad the candidates are).
    """

    indices: np.ndarray
    w0: np.ndarray
    lam: float
    config: SplitConfig
    prune_seed: float | None = None


@dataclass
class SplitCandidate:
    feature: int
    rank: int
    threshold: float
    total: float


@dataclass
class SplitDecision:
    feature: int
    threshold: float
    total_loss: float
    left_fit: object
    right_fit: object
    scanned_count: int
    pruned_count: int
    rank: int = 0
    left_indices: np.ndarray | None = None
    right_indices: np.ndarray | None = None


def pruning_bound(l_k, r_nk, penalty_l, penalty_r, n, k, strategy,
                  per_sample_normalization=True):
    """Lower bound (exact) or extrapolation (approx) for totals in [k, n-k].

    l_k is the loss of the k-sample prefix side and r_nk the loss of the
    k-sample complement side at scan step k. The exact bound is their sum,
    valid because both losses only grow as the middle is approached. The
    approx variants add (n - 2k) times the smaller or larger data-fit term,
    where the data fit is loss minus penalty, taken as totals by default
    or divided by k and n - k respectively when per-sample normalization
    is on. NO_SPEEDUP never prunes and returns -inf.
    """
    if strategy == Strategy.NO_SPEEDUP:
        return -math.inf
    if strategy == Strategy.EXACT:
        return l_k + r_nk
    dl = l_k - penalty_l
    dr = r_nk - penalty_r
    if per_sample_normalization:
        dl /= k
        dr /= n - k
    extra = min(dl, dr) if strategy == Strategy.APPROX_MIN else max(dl, dr)
    return l_k + r_nk + (n - 2 * k) * extra


def _feature_arrays(psi_col, n, min_leaf):
    """Sort one feature descending and mark the admissible split positions.

    Returns (order, psi_sorted, splittable) or None when the feature is
    constant or no position satisfies the leaf-size constraint. splittable[m]
    is set only where the adjacent sorted values actually differ, so no split
    ever separates equal feature values.
    """
    order = np.argsort(-psi_col, kind="stable")
    psi_s = psi_col[order]
    if psi_s[0] == psi_s[n - 1]:
        return None
    splittable = np.zeros(n + 1, dtype=np.uint8)
    lo = min_leaf
    hi = n - min_leaf
    if lo > hi:
        return None
    ranks = np.arange(lo, hi + 1)
    distinct = psi_s[ranks - 1] > psi_s[ranks]
    splittable[ranks[distinct]] = 1
    if not splittable.any():
        return None
    return order, psi_s, splittable


def _scan_one(Xn, Yn, order, splittable, ctx, threshold_seed):
    n = len(order)
    out_l = np.full(n + 1, np.nan)
    out_r = np.full(n + 1, np.nan)
    Xs = np.ascontiguousarray(Xn[order])
    Ys = np.ascontiguousarray(Yn[order])
    w0 = np.ascontiguousarray(ctx.w0, dtype=np.float64)
    best_m, best_total, scanned, pruned = _scan.scan_feature(
        Xs, Ys, splittable, float(ctx.lam), w0,
        int(ctx.config.min_leaf_size), ctx.config.strategy.code,
        1 if ctx.config.per_sample_normalization else 0,
        threshold_seed, out_l, out_r,
    )
    return best_m, best_total, scanned, pruned, out_l, out_r


def feature_scan(ctx, feature, data, best_so_far=math.inf):
    """Scan one feature and report every evaluated step plus the best candidate.

    Returns (steps, candidate) where steps is a list of (k, l(k), r(n-k))
    tuples for each step where both sides were evaluated, and candidate is a
    SplitCandidate or None. An all-equal feature yields ([], None).
    """
    idx = np.asarray(ctx.indices)
    Xn = np.ascontiguousarray(np.asarray(data.X, dtype=np.float64)[idx])
    Yn = np.ascontiguousarray(np.asarray(data.Y, dtype=np.float64)[idx])
    psi_col = np.asarray(data.Psi, dtype=np.float64)[idx, feature]
    n = len(idx)
    prepared = _feature_arrays(psi_col, n, ctx.config.min_leaf_size)
    if prepared is None:
        return [], None
    order, psi_s, splittable = prepared
    seed = best_so_far
    if ctx.prune_seed is not None:
        seed = min(seed, ctx.prune_seed)
    best_m, best_total, _, _, out_l, out_r = _scan_one(
        Xn, Yn, order, splittable, ctx, seed)
    steps = []
    for k in range(1, n):
        if not (np.isnan(out_l[k]) or np.isnan(out_r[k])):
            steps.append((k, float(out_l[k]), float(out_r[k])))
    candidate = None
    if best_m > 0:
        threshold = 0.5 * (psi_s[best_m - 1] + psi_s[best_m])
        candidate = SplitCandidate(feature, int(best_m), float(threshold),
                                   float(best_total))
    return steps, candidate


def _refit_side(X, Y, lam, w0):
    """From-scratch solve of one side, with the loss evaluated by direct
    residual sums rather than the O(d) scan identity, so reported losses
    are accurate even when a side interpolates its samples exactly."""
    problem = RidgeProblem(X=X, Y=Y, lam=lam, w0=w0)
    fit = ridge_fit(problem)
    return FitResult(w=fit.w, loss=ridge_objective(problem, fit.w))


def find_best_split(ctx, data):
    """Best split over all features and admissible thresholds, or None.

    None signals that no valid split exists: the node is too small, every
    feature is constant, or min_leaf_size admits no threshold. For the
    NO_SPEEDUP and EXACT strategies the returned pair is the exact argmin of
    the total loss; ties resolve to the smallest feature index, then the
    smallest threshold rank. The two winning side models are refit from
    scratch so the reported fits do not carry scan round-off.
    """
    idx = np.asarray(ctx.indices)
    n = len(idx)
    cfg = ctx.config
    if n < 2 * cfg.min_leaf_size:
        return None
    X = np.asarray(data.X, dtype=np.float64)
    Psi = np.asarray(data.Psi, dtype=np.float64)
    Y = np.asarray(data.Y, dtype=np.float64)
    Xn = np.ascontiguousarray(X[idx])
    Yn = np.ascontiguousarray(Y[idx])
    Psin = Psi[idx]
    n_features = Psin.shape[1]
    seed = math.inf if ctx.prune_seed is None else float(ctx.prune_seed)

    prepared = {}
    for f in range(n_features):
        arrays = _feature_arrays(np.ascontiguousarray(Psin[:, f]), n,
                                 cfg.min_leaf_size)
        if arrays is not None:
            prepared[f] = arrays

    if not prepared:
        return None

    scanned = 0
    pruned = 0
    best = None  # (total, feature, rank, threshold, order)
    propagate = cfg.strategy == Strategy.EXACT and cfg.threads == 1

    def reduce_result(f, result):
        nonlocal scanned, pruned, best
        order, psi_s, _ = prepared[f]
        best_m, best_total, sc, pr, _, _ = result
        scanned += sc
        pruned += pr
        if best_m > 0 and (best is None or best_total < best[0]):
            threshold = 0.5 * (psi_s[best_m - 1] + psi_s[best_m])
            best = (float(best_total), f, int(best_m), float(threshold), order)

    if cfg.threads > 1 and len(prepared) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = {
                f: pool.submit(_scan_one, Xn, Yn, order, splittable, ctx, seed)
                for f, (order, _, splittable) in prepared.items()
            }
        for f in sorted(futures):
            reduce_result(f, futures[f].result())
    else:
        running = seed
        for f, (order, _, splittable) in prepared.items():
            threshold_seed = running if propagate else seed
            result = _scan_one(Xn, Yn, order, splittable, ctx, threshold_seed)
            reduce_result(f, result)
            if propagate and best is not None and best[0] < running:
                running = best[0]

    if best is None:
        return None
    total, f, m, threshold, order = best
    left_rows = idx[order[:m]]
    right_rows = idx[order[m:]]
    left_fit = _refit_side(X[left_rows], Y[left_rows], ctx.lam, ctx.w0)
    right_fit = _refit_side(X[right_rows], Y[right_rows], ctx.lam, ctx.w0)
    return SplitDecision(
        feature=f,
        threshold=threshold,
        total_loss=left_fit.loss + right_fit.loss,
        left_fit=left_fit,
        right_fit=right_fit,
        scanned_count=scanned,
        pruned_count=pruned,
        rank=m,
        left_indices=left_rows,
        right_indices=right_rows,
    )
