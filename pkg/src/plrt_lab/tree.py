"""Greedy top-down training of piecewise-linear regression trees.

Every node fits an anchored ridge model; the anchor is the parent's fitted
vector (zero at the root), so regularization pulls each refinement toward the
model it splits. A node is split when the best split's total loss improves on
the node's own loss by at least min_loss_decrease, subject to depth and leaf
size limits. Leaves keep the anchored ridge fit or are refit with lasso.
"""

from collections import namedtuple
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, EmptyDataset
from .regress import RidgeProblem, append_bias, lasso_fit, ridge_fit
from .splitsearch import NodeContext, SplitConfig, find_best_split


@dataclass
class TrainConfig:
    """Training parameters.

    gamma is the l2 regularizer used both by the split criterion and by
    ridge-leaf finalization. With gamma == 0 the effective minimum leaf size
    is raised to the regression dimension (bias included) so every fitted
    system stays positive definite. split_config.min_leaf_size is overridden
    by the tree's effective value; set min_leaf_size here.
    """

    max_depth: int = 10
    min_leaf_size: int = 1
    min_loss_decrease: float = 0.0
    gamma: float = 1.0
    leaf_penalty: str = "ridge"
    lasso_lam: float = 0.0
    split_config: SplitConfig = field(default_factory=SplitConfig)
    root_feature_selection: int | None = None
    bias: bool = True


@dataclass
class Leaf:
    w: np.ndarray
    n_samples: int
    loss: float


@dataclass
class Interior:
    feature: int
    threshold: float
    ge: object
    lt: object
    w_fit: np.ndarray | None = None  # node's own ridge fit; not serialized


@dataclass
class PlrtModel:
    root: object
    d: int
    D: int
    bias: bool
    config: TrainConfig
    counters: dict | None = None


_Design = namedtuple("_Design", ["X", "Psi", "Y"])


def select_root_features(data, s):
    """Indices (ascending) of the s regression coordinates most correlated with Y.

    Ranking is by absolute Pearson correlation; zero-variance coordinates get
    correlation 0 and rank last; equal correlations resolve to the lower index.
    """
    X = np.asarray(data.X, dtype=np.float64)
    Y = np.asarray(data.Y, dtype=np.float64)
    n, d = X.shape
    if not 1 <= s <= d:
        raise ValueError(f"s must be in [1, {d}], got {s}")
    xc = X - X.mean(axis=0)
    yc = Y - Y.mean()
    den = np.sqrt((xc * xc).sum(axis=0) * float(yc @ yc))
    num = np.abs(xc.T @ yc)
    corr = np.divide(num, den, out=np.zeros(d), where=den > 0)
    order = np.lexsort((np.arange(d), -corr))
    picked = np.sort(order[:s])
    return [int(i) for i in picked]


def _effective_min_leaf(config, d_eff):
    min_leaf = int(config.min_leaf_size)
    if config.gamma == 0:
        min_leaf = max(min_leaf, d_eff)
    return min_leaf


def train_plrt(data, config):
    """Grow a PlrtModel on a Dataset-like object with X, Psi, Y attributes."""
    X = np.asarray(data.X, dtype=np.float64)
    Psi = np.asarray(data.Psi, dtype=np.float64)
    Y = np.asarray(data.Y, dtype=np.float64)
    n, d_raw = X.shape
    if n == 0:
        raise EmptyDataset("cannot train on zero rows")
    if config.leaf_penalty not in ("ridge", "lasso"):
        raise ValueError(f"unknown leaf_penalty {config.leaf_penalty!r}")

    selected = None
    X_used = X
    if config.root_feature_selection is not None:
        selected = select_root_features(data, int(config.root_feature_selection))
        X_used = X[:, selected]
    Xd = append_bias(X_used) if config.bias else np.ascontiguousarray(X_used)
    d_eff = Xd.shape[1]
    min_leaf = _effective_min_leaf(config, d_eff)
    split_cfg = replace(config.split_config, min_leaf_size=min_leaf)
    design = _Design(X=Xd, Psi=Psi, Y=Y)
    gamma = float(config.gamma)
    counters = {"scanned": 0, "pruned": 0}

    lasso_mask = None
    if config.leaf_penalty == "lasso":
        lasso_mask = np.ones(d_eff, dtype=bool)
        if config.bias:
            lasso_mask[-1] = False

    def pad(w):
        if selected is None:
            return w
        full = np.zeros(d_raw + (1 if config.bias else 0))
        full[selected] = w[: len(selected)]
        if config.bias:
            full[-1] = w[-1]
        return full

    def make_leaf(indices, fit):
        if lasso_mask is not None:
            refit = lasso_fit(Xd[indices], Y[indices], config.lasso_lam,
                              w_init=fit.w.copy(), penalize=lasso_mask)
            return Leaf(w=pad(refit.w), n_samples=len(indices), loss=refit.loss)
        return Leaf(w=pad(fit.w), n_samples=len(indices), loss=fit.loss)

    def build(indices, w0, depth):
        fit = ridge_fit(RidgeProblem(X=Xd[indices], Y=Y[indices],
                                     lam=gamma, w0=w0))
        if depth >= config.max_depth or len(indices) < 2 * min_leaf:
            return make_leaf(indices, fit)
        ctx = NodeContext(indices=indices, w0=fit.w, lam=gamma,
                          config=split_cfg, prune_seed=fit.loss)
        decision = find_best_split(ctx, design)
        if decision is not None:
            counters["scanned"] += decision.scanned_count
            counters["pruned"] += decision.pruned_count
        if decision is None or fit.loss - decision.total_loss < config.min_loss_decrease:
            return make_leaf(indices, fit)
        ge = build(decision.left_indices, fit.w, depth + 1)
        lt = build(decision.right_indices, fit.w, depth + 1)
        return Interior(feature=decision.feature, threshold=decision.threshold,
                        ge=ge, lt=lt, w_fit=pad(fit.w))

    root = build(np.arange(n), np.zeros(d_eff), 0)
    return PlrtModel(root=root, d=d_raw, D=Psi.shape[1], bias=config.bias,
                     config=config, counters=counters)


def _leaf_value(model, node, x_aug):
    return float(node.w @ x_aug)


def predict(model, x, psi):
    """Route one point down the tree and evaluate its leaf model."""
    x = np.asarray(x, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    if x.shape != (model.d,):
        raise DimensionMismatch(f"x has shape {x.shape}, model expects ({model.d},)")
    if psi.shape != (model.D,):
        raise DimensionMismatch(f"psi has shape {psi.shape}, model expects ({model.D},)")
    x_aug = np.append(x, 1.0) if model.bias else x
    node = model.root
    while isinstance(node, Interior):
        node = node.ge if psi[node.feature] >= node.threshold else node.lt
    return _leaf_value(model, node, x_aug)


def predict_batch(model, X, Psi):
    """Vectorized prediction for a matrix of points."""
    X = np.asarray(X, dtype=np.float64)
    Psi = np.asarray(Psi, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.d:
        raise DimensionMismatch(f"X has shape {X.shape}, model expects (*, {model.d})")
    if Psi.ndim != 2 or Psi.shape[1] != model.D:
        raise DimensionMismatch(f"Psi has shape {Psi.shape}, model expects (*, {model.D})")
    Xd = append_bias(X) if model.bias else X
    out = np.empty(X.shape[0])

    def walk(node, mask):
        if isinstance(node, Leaf):
            if mask.any():
                out[mask] = Xd[mask] @ node.w
            return
        ge_mask = mask & (Psi[:, node.feature] >= node.threshold)
        walk(node.ge, ge_mask)
        walk(node.lt, mask & ~ge_mask)

    walk(model.root, np.ones(X.shape[0], dtype=bool))
    return out


def predict_batch_truncated(model, X, Psi, depth_cap):
    """Predict as if the tree had been stopped at depth_cap.

    Interior nodes at the cap answer with their own ridge fit, which is only
    available on freshly trained models (w_fit is not serialized).
    """
    X = np.asarray(X, dtype=np.float64)
    Psi = np.asarray(Psi, dtype=np.float64)
    Xd = append_bias(X) if model.bias else X
    out = np.empty(X.shape[0])

    def walk(node, mask, depth):
        if isinstance(node, Leaf):
            if mask.any():
                out[mask] = Xd[mask] @ node.w
            return
        if depth >= depth_cap:
            if node.w_fit is None:
                raise ValueError("truncated prediction needs in-memory node fits")
            if mask.any():
                out[mask] = Xd[mask] @ node.w_fit
            return
        ge_mask = mask & (Psi[:, node.feature] >= node.threshold)
        walk(node.ge, ge_mask, depth + 1)
        walk(node.lt, mask & ~ge_mask, depth + 1)

    walk(model.root, np.ones(X.shape[0], dtype=bool), 0)
    return out


def tree_depth(node):
    if isinstance(node, Leaf):
        return 0
    return 1 + max(tree_depth(node.ge), tree_depth(node.lt))


def leaf_count(node):
    if isinstance(node, Leaf):
        return 1
    return leaf_count(node.ge) + leaf_count(node.lt)


def iter_leaves(node):
    if isinstance(node, Leaf):
        yield node
    else:
        yield from iter_leaves(node.ge)
        yield from iter_leaves(node.lt)


def node_to_dict(node):
    if isinstance(node, Leaf):
        return {
            "type": "leaf",
            "w": [float(v) for v in node.w],
            "n": int(node.n_samples),
            "loss": float(node.loss),
        }
    return {
        "type": "interior",
        "feature": int(node.feature),
        "threshold": float(node.threshold),
        "ge": node_to_dict(node.ge),
        "lt": node_to_dict(node.lt),
    }


def config_to_dict(config):
    """Modeling hyperparameters only. Scan-procedure knobs (strategy,
    normalization, threads) never change the trained model for the exact
    strategies, so they stay out of the file and models trained with
    different scan settings serialize identically."""
    return {
        "max_depth": int(config.max_depth),
        "min_leaf_size": int(config.min_leaf_size),
        "min_loss_decrease": float(config.min_loss_decrease),
        "gamma": float(config.gamma),
        "leaf_penalty": config.leaf_penalty,
        "lasso_lam": float(config.lasso_lam),
        "root_feature_selection": (
            None if config.root_feature_selection is None
            else int(config.root_feature_selection)
        ),
    }


def config_from_dict(obj, bias):
    split_cfg = SplitConfig(min_leaf_size=int(obj["min_leaf_size"]))
    return TrainConfig(
        max_depth=int(obj["max_depth"]),
        min_leaf_size=int(obj["min_leaf_size"]),
        min_loss_decrease=float(obj["min_loss_decrease"]),
        gamma=float(obj["gamma"]),
        leaf_penalty=obj["leaf_penalty"],
        lasso_lam=float(obj["lasso_lam"]),
        split_config=split_cfg,
        root_feature_selection=obj["root_feature_selection"],
        bias=bias,
    )


def model_to_dict(model):
    """JSON-ready dict. Thread counts and counters are deliberately left out
    so identical training inputs give identical bytes however they were
    scheduled."""
    return {
        "format_version": 1,
        "d": int(model.d),
        "D": int(model.D),
        "bias": bool(model.bias),
        "config": config_to_dict(model.config),
        "root": node_to_dict(model.root),
    }


def node_from_dict(obj):
    if obj["type"] == "leaf":
        return Leaf(w=np.asarray(obj["w"], dtype=np.float64),
                    n_samples=int(obj["n"]), loss=float(obj["loss"]))
    return Interior(feature=int(obj["feature"]), threshold=float(obj["threshold"]),
                    ge=node_from_dict(obj["ge"]), lt=node_from_dict(obj["lt"]))


def model_from_dict(obj):
    bias = bool(obj["bias"])
    return PlrtModel(
        root=node_from_dict(obj["root"]),
        d=int(obj["d"]),
        D=int(obj["D"]),
        bias=bias,
        config=config_from_dict(obj["config"], bias),
    )
