import json

import numpy as np
import pytest

from plrt_lab.baselines import (ConstantTreeModel, model_from_dict,
                                model_to_dict, predict, predict_batch,
                                predict_batch_truncated, train_cart, train_m5,
                                variance_best_split)
from plrt_lab.dataio import Dataset
from plrt_lab.errors import DimensionMismatch, EmptyDataset
from plrt_lab.tree import Interior, Leaf, TrainConfig, iter_leaves


def make_dataset(X, Psi, Y):
    X = np.asarray(X, dtype=np.float64)
    Psi = np.asarray(Psi, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    return Dataset(
        X=X,
        Psi=Psi,
        Y=Y,
        x_names=tuple(f"x{i}" for i in range(X.shape[1])),
        psi_names=tuple(f"p{i}" for i in range(Psi.shape[1])),
        target_name="y",
    )


def step_dataset():
    """Four points whose targets step from 0 to 10 between psi 2 and 3."""
    x = np.arange(1.0, 5.0).reshape(4, 1)
    y = np.array([0.0, 0.0, 10.0, 10.0])
    return make_dataset(x, x, y)


def brute_force_sse_split(Psi, Y, min_leaf):
    best = None
    n = len(Y)
    for f in range(Psi.shape[1]):
        order = np.argsort(-Psi[:, f], kind="stable")
        psi_s = Psi[order, f]
        for k in range(min_leaf, n - min_leaf + 1):
            if psi_s[k - 1] <= psi_s[k]:
                continue
            hi, lo = Y[order[:k]], Y[order[k:]]
            total = float(((hi - hi.mean()) ** 2).sum()
                          + ((lo - lo.mean()) ** 2).sum())
            key = (total, f, k)
            if best is None or key < best:
                best = key
    return best


def test_variance_split_on_clean_step():
    data = step_dataset()
    decision = variance_best_split(np.arange(4), data, 1)
    assert decision.feature == 0
    assert decision.threshold == 2.5
    assert decision.total_loss == 0.0
    assert decision.left_fit.w[0] == 10.0  # high-psi side
    assert decision.right_fit.w[0] == 0.0
    assert sorted(decision.left_indices.tolist()) == [2, 3]


def test_variance_split_matches_brute_force():
    rng = np.random.default_rng(60)
    for _ in range(40):
        n = int(rng.integers(4, 40))
        D = int(rng.integers(1, 4))
        Psi = rng.standard_normal((n, D))
        Y = rng.standard_normal(n)
        data = make_dataset(np.zeros((n, 1)), Psi, Y)
        decision = variance_best_split(np.arange(n), data, 1)
        want = brute_force_sse_split(Psi, Y, 1)
        assert decision.feature == want[1]
        assert decision.rank == want[2]
        assert decision.total_loss == pytest.approx(want[0], rel=1e-9, abs=1e-9)


def test_variance_split_respects_min_leaf_and_constant_feature():
    data = step_dataset()
    assert variance_best_split(np.arange(4), data, 3) is None
    flat = make_dataset(np.ones((6, 1)), np.ones((6, 1)), np.arange(6.0))
    assert variance_best_split(np.arange(6), flat, 1) is None


def test_cart_learns_the_step_exactly():
    data = step_dataset()
    model = train_cart(data, TrainConfig(max_depth=1))
    assert isinstance(model.root, Interior)
    assert model.root.threshold == 2.5
    assert model.criterion == "cart"
    preds = predict_batch(model, data.X, data.Psi)
    assert np.array_equal(preds, data.Y)
    assert predict(model, np.array([9.0]), np.array([2.6])) == 10.0
    assert predict(model, np.array([9.0]), np.array([2.4])) == 0.0


def test_cart_leaves_hold_means_and_sse():
    rng = np.random.default_rng(61)
    Psi = rng.standard_normal((100, 2))
    Y = rng.standard_normal(100)
    data = make_dataset(rng.standard_normal((100, 3)), Psi, Y)
    model = train_cart(data, TrainConfig(max_depth=2, min_leaf_size=5))
    for leaf in iter_leaves(model.root):
        assert len(leaf.w) == 1
        assert leaf.loss >= 0.0
        assert leaf.n_samples >= 5
    total = sum(leaf.n_samples for leaf in iter_leaves(model.root))
    assert total == 100


def test_m5_leaves_are_ridge_models_over_all_variables():
    rng = np.random.default_rng(62)
    n = 300
    X = rng.standard_normal((n, 2))
    Psi = rng.standard_normal((n, 1))
    Y = np.where(Psi[:, 0] >= 0, 3.0 + 2.0 * X[:, 0], -3.0 - 2.0 * X[:, 0])
    data = make_dataset(X, Psi, Y)
    model = train_m5(data, TrainConfig(max_depth=1, gamma=1e-8))
    assert model.criterion == "m5"
    for leaf in iter_leaves(model.root):
        assert len(leaf.w) == 3
    preds = predict_batch(model, data.X, data.Psi)
    assert float(np.mean((preds - data.Y) ** 2)) < 1e-10


def test_m5_beats_cart_on_in_leaf_linear_structure():
    rng = np.random.default_rng(63)
    n = 400
    X = rng.standard_normal((n, 2))
    Psi = rng.standard_normal((n, 2))
    Y = 2.0 * X[:, 0] - X[:, 1] + np.where(Psi[:, 0] >= 0, 4.0, -4.0)
    data = make_dataset(X, Psi, Y)
    config = TrainConfig(max_depth=2, gamma=1e-6)
    cart_mse = float(np.mean(
        (predict_batch(train_cart(data, config), X, Psi) - Y) ** 2))
    m5_mse = float(np.mean(
        (predict_batch(train_m5(data, config), X, Psi) - Y) ** 2))
    assert m5_mse < cart_mse


def test_min_loss_decrease_stops_baseline_growth():
    data = step_dataset()
    model = train_cart(data, TrainConfig(max_depth=3, min_loss_decrease=1e9))
    assert isinstance(model.root, Leaf)
    assert model.root.w[0] == pytest.approx(5.0)


def test_empty_dataset_rejected():
    data = make_dataset(np.empty((0, 1)), np.empty((0, 1)), np.empty(0))
    with pytest.raises(EmptyDataset):
        train_cart(data, TrainConfig())


def test_dimension_checks():
    data = step_dataset()
    model = train_cart(data, TrainConfig(max_depth=1))
    with pytest.raises(DimensionMismatch):
        predict(model, np.ones(2), np.ones(1))
    with pytest.raises(DimensionMismatch):
        predict_batch(model, np.ones((3, 1)), np.ones((3, 2)))


def test_truncated_prediction_answers_with_node_means():
    rng = np.random.default_rng(64)
    Psi = rng.standard_normal((200, 1))
    Y = np.where(Psi[:, 0] >= 0, 1.0, -1.0) + 0.1 * rng.standard_normal(200)
    data = make_dataset(rng.standard_normal((200, 1)), Psi, Y)
    model = train_cart(data, TrainConfig(max_depth=2))
    at_zero = predict_batch_truncated(model, data.X, data.Psi, 0)
    assert np.allclose(at_zero, float(Y.mean()))
    clone = model_from_dict(model_to_dict(model))
    with pytest.raises(ValueError):
        predict_batch_truncated(clone, data.X, data.Psi, 0)


def test_serialization_round_trip_keeps_criterion():
    rng = np.random.default_rng(65)
    X = rng.standard_normal((150, 2))
    Psi = rng.standard_normal((150, 2))
    Y = rng.standard_normal(150)
    data = make_dataset(X, Psi, Y)
    for train in (train_cart, train_m5):
        model = train(data, TrainConfig(max_depth=2, gamma=0.4))
        obj = model_to_dict(model)
        assert obj["criterion"] == model.criterion
        payload = json.dumps(obj, sort_keys=True)
        clone = model_from_dict(json.loads(payload))
        assert isinstance(clone, ConstantTreeModel)
        assert json.dumps(model_to_dict(clone), sort_keys=True) == payload
        assert np.array_equal(predict_batch(clone, X, Psi),
                              predict_batch(model, X, Psi))
