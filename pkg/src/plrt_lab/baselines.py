"""Baseline trees split by target variance: CART and an M5-style variant.

Both share the same structure search: every split minimizes the summed
within-side SSE of the targets, found in one pass per sorted feature with
running mean accumulators. CART keeps the leaf means; the M5 variant refits
every leaf with a ridge model over all regression variables.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyDataset
from .regress import FitResult, RidgeProblem, append_bias, ridge_fit
from .splitsearch import SplitDecision
from .tree import (Interior, Leaf, config_from_dict, config_to_dict,
                   node_from_dict, node_to_dict)


@dataclass
class ConstantTreeModel:
    root: object
    d: int
    D: int
    bias: bool
    config: object
    criterion: str


def variance_best_split(indices, data, min_leaf_size):
    """Best split by summed within-side SSE of the targets, or None.

    Same threshold placement, tie skipping, and lexicographic tie rules as
    the linear-model split search. Accumulator form: for a side with sum s,
    sum of squares q and count m, SSE = q - s^2 / m (clamped at zero).
    """
    idx = np.asarray(indices)
    n = len(idx)
    if n < 2 * min_leaf_size:
        return None
    Psi = np.asarray(data.Psi, dtype=np.float64)[idx]
    Y = np.asarray(data.Y, dtype=np.float64)
    Yn = Y[idx]
    scanned = 0
    best = None  # (total, feature, rank, threshold, order)
    for f in range(Psi.shape[1]):
        psi_col = np.ascontiguousarray(Psi[:, f])
        order = np.argsort(-psi_col, kind="stable")
        psi_s = psi_col[order]
        if psi_s[0] == psi_s[n - 1]:
            continue
        ranks = np.arange(min_leaf_size, n - min_leaf_size + 1)
        if len(ranks) == 0:
            continue
        ranks = ranks[psi_s[ranks - 1] > psi_s[ranks]]
        if len(ranks) == 0:
            continue
        ys = Yn[order]
        cum = np.cumsum(ys)
        cumsq = np.cumsum(ys * ys)
        left_sum = cum[ranks - 1]
        left_sq = cumsq[ranks - 1]
        sse_l = np.maximum(left_sq - left_sum * left_sum / ranks, 0.0)
        right_n = n - ranks
        right_sum = cum[n - 1] - left_sum
        sse_r = np.maximum(
            (cumsq[n - 1] - left_sq) - right_sum * right_sum / right_n, 0.0)
        totals = sse_l + sse_r
        scanned += len(ranks)
        j = int(np.argmin(totals))
        if best is None or totals[j] < best[0]:
            m = int(ranks[j])
            threshold = 0.5 * (psi_s[m - 1] + psi_s[m])
            best = (float(totals[j]), f, m, float(threshold), order)
    if best is None:
        return None
    total, f, m, threshold, order = best
    left_rows = idx[order[:m]]
    right_rows = idx[order[m:]]

    def side_fit(rows):
        values = Y[rows]
        mean = float(values.mean())
        sse = float(((values - mean) ** 2).sum())
        return FitResult(w=np.array([mean]), loss=sse)

    left_fit = side_fit(left_rows)
    right_fit = side_fit(right_rows)
    return SplitDecision(
        feature=f, threshold=threshold,
        total_loss=left_fit.loss + right_fit.loss,
        left_fit=left_fit, right_fit=right_fit,
        scanned_count=scanned, pruned_count=0, rank=m,
        left_indices=left_rows, right_indices=right_rows,
    )


def _build_constant_tree(data, config, leaf_fn):
    Y = np.asarray(data.Y, dtype=np.float64)
    n = len(Y)
    if n == 0:
        raise EmptyDataset("cannot train on zero rows")
    min_leaf = int(config.min_leaf_size)

    def build(rows, depth):
        values = Y[rows]
        mean = float(values.mean())
        sse = float(((values - mean) ** 2).sum())
        if depth >= config.max_depth or len(rows) < 2 * min_leaf:
            return leaf_fn(rows, mean, sse)
        decision = variance_best_split(rows, data, min_leaf)
        if decision is None or sse - decision.total_loss < config.min_loss_decrease:
            return leaf_fn(rows, mean, sse)
        ge = build(decision.left_indices, depth + 1)
        lt = build(decision.right_indices, depth + 1)
        return Interior(feature=decision.feature, threshold=decision.threshold,
                        ge=ge, lt=lt, w_fit=np.array([mean]))

    return build(np.arange(n), 0)


def train_cart(data, config):
    """Variance-split tree with constant leaves holding the sample mean."""

    def cart_leaf(rows, mean, sse):
        return Leaf(w=np.array([mean]), n_samples=len(rows), loss=sse)

    root = _build_constant_tree(data, config, cart_leaf)
    X = np.asarray(data.X)
    Psi = np.asarray(data.Psi)
    return ConstantTreeModel(root=root, d=X.shape[1], D=Psi.shape[1],
                             bias=config.bias, config=config, criterion="cart")


def train_m5(data, config):
    """Same structure as train_cart, then every leaf refit by ridge on all
    regression variables with anchor zero."""
    X = np.asarray(data.X, dtype=np.float64)
    Y = np.asarray(data.Y, dtype=np.float64)
    Xd = append_bias(X) if config.bias else X
    gamma = float(config.gamma)

    def m5_leaf(rows, mean, sse):
        fit = ridge_fit(RidgeProblem(X=Xd[rows], Y=Y[rows], lam=gamma))
        return Leaf(w=fit.w, n_samples=len(rows), loss=fit.loss)

    root = _build_constant_tree(data, config, m5_leaf)
    Psi = np.asarray(data.Psi)
    return ConstantTreeModel(root=root, d=X.shape[1], D=Psi.shape[1],
                             bias=config.bias, config=config, criterion="m5")


def _check_dims(model, X, Psi):
    if X.ndim != 2 or X.shape[1] != model.d:
        raise DimensionMismatch(f"X has shape {X.shape}, model expects (*, {model.d})")
    if Psi.ndim != 2 or Psi.shape[1] != model.D:
        raise DimensionMismatch(f"Psi has shape {Psi.shape}, model expects (*, {model.D})")


def predict(model, x, psi):
    x = np.asarray(x, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    if x.shape != (model.d,):
        raise DimensionMismatch(f"x has shape {x.shape}, model expects ({model.d},)")
    if psi.shape != (model.D,):
        raise DimensionMismatch(f"psi has shape {psi.shape}, model expects ({model.D},)")
    node = model.root
    while isinstance(node, Interior):
        node = node.ge if psi[node.feature] >= node.threshold else node.lt
    if model.criterion == "cart":
        return float(node.w[0])
    x_aug = np.append(x, 1.0) if model.bias else x
    return float(node.w @ x_aug)


def predict_batch(model, X, Psi):
    X = np.asarray(X, dtype=np.float64)
    Psi = np.asarray(Psi, dtype=np.float64)
    _check_dims(model, X, Psi)
    constant = model.criterion == "cart"
    Xd = None
    if not constant:
        Xd = append_bias(X) if model.bias else X
    out = np.empty(X.shape[0])

    def walk(node, mask):
        if isinstance(node, Leaf):
            if mask.any():
                out[mask] = node.w[0] if constant else Xd[mask] @ node.w
            return
        ge_mask = mask & (Psi[:, node.feature] >= node.threshold)
        walk(node.ge, ge_mask)
        walk(node.lt, mask & ~ge_mask)

    walk(model.root, np.ones(X.shape[0], dtype=bool))
    return out


def predict_batch_truncated(model, X, Psi, depth_cap):
    """Predict as if training had stopped at depth_cap; interior nodes at the
    cap answer with their stored sample mean (both criteria)."""
    X = np.asarray(X, dtype=np.float64)
    Psi = np.asarray(Psi, dtype=np.float64)
    _check_dims(model, X, Psi)
    constant = model.criterion == "cart"
    Xd = None
    if not constant:
        Xd = append_bias(X) if model.bias else X
    out = np.empty(X.shape[0])

    def walk(node, mask, depth):
        if isinstance(node, Leaf):
            if mask.any():
                out[mask] = node.w[0] if constant else Xd[mask] @ node.w
            return
        if depth >= depth_cap:
            if node.w_fit is None:
                raise ValueError("truncated prediction needs in-memory node fits")
            if mask.any():
                out[mask] = node.w_fit[0]
            return
        ge_mask = mask & (Psi[:, node.feature] >= node.threshold)
        walk(node.ge, ge_mask, depth + 1)
        walk(node.lt, mask & ~ge_mask, depth + 1)

    walk(model.root, np.ones(X.shape[0], dtype=bool), 0)
    return out


def model_to_dict(model):
    return {
        "format_version": 1,
        "d": int(model.d),
        "D": int(model.D),
        "bias": bool(model.bias),
        "criterion": model.criterion,
        "config": config_to_dict(model.config),
        "root": node_to_dict(model.root),
    }


def model_from_dict(obj):
    bias = bool(obj["bias"])
    return ConstantTreeModel(
        root=node_from_dict(obj["root"]),
        d=int(obj["d"]), D=int(obj["D"]), bias=bias,
        config=config_from_dict(obj["config"], bias),
        criterion=obj["criterion"],
    )
