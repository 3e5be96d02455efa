"""Dataset ingestion, standardization, splitting, metrics, and model files.

CSV is the only ingestion format: UTF-8, comma delimiter, one header row,
'.' decimal separator. The split-space columns default to the regression
columns, so plain tabular data works with a one-line schema.
"""

import csv
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import baselines, tree
from .errors import (DegenerateSplit, EmptyFile, LengthMismatch,
                     MissingColumn, ParseError, SchemaViolation,
                     VersionMismatch)


@dataclass(frozen=True)
class FeatureStats:
    """Per-column shift and scale, kept so test data can reuse the
    training-set standardization."""

    x_mean: np.ndarray
    x_scale: np.ndarray
    psi_mean: np.ndarray
    psi_scale: np.ndarray


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    Psi: np.ndarray
    Y: np.ndarray
    x_names: tuple
    psi_names: tuple
    target_name: str
    standardization: Optional[FeatureStats] = None

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    @property
    def D(self):
        return self.Psi.shape[1]


@dataclass
class SchemaConfig:
    """Column roles for a CSV file. split_columns defaults to the
    regression columns. target may be None for label-free files
    (prediction inputs); Y is then all zeros."""

    target: Optional[str]
    regression_columns: Sequence[str]
    split_columns: Optional[Sequence[str]] = None
    standardize: bool = False

    def __post_init__(self):
        if not self.regression_columns:
            raise ValueError("regression_columns must be non-empty")
        if self.split_columns is not None and not self.split_columns:
            raise ValueError("split_columns must be non-empty when given")
        feature_cols = list(self.regression_columns) + list(self.split_columns or [])
        if self.target is not None and self.target in feature_cols:
            raise ValueError(f"target {self.target!r} also listed as a feature")

    @property
    def effective_split_columns(self):
        if self.split_columns is None:
            return list(self.regression_columns)
        return list(self.split_columns)


def _parse_cell(raw, line_no, column):
    if raw is None or raw == "":
        raise ParseError(line_no, column, raw)
    try:
        value = float(raw)
    except ValueError:
        raise ParseError(line_no, column, raw) from None
    if not math.isfinite(value):
        raise ParseError(line_no, column, raw)
    return value


def load_csv(path, schema, stats=None):
    """Read the columns a schema references into a Dataset.

    Row numbers in errors are 1-based file line numbers (the header is
    line 1). Pass stats from a previously loaded training set to apply
    its standardization instead of computing fresh statistics.
    """
    x_cols = list(schema.regression_columns)
    psi_cols = schema.effective_split_columns
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path} has no header row") from None
        positions = {name: i for i, name in enumerate(header)}
        target_cols = [] if schema.target is None else [schema.target]
        for name in target_cols + x_cols + psi_cols:
            if name not in positions:
                raise MissingColumn(f"column {name!r} not in {path}")
        needed = target_cols + x_cols + psi_cols
        rows = []
        for line_no, record in enumerate(reader, start=2):
            parsed = {}
            for name in needed:
                pos = positions[name]
                raw = record[pos] if pos < len(record) else None
                parsed[name] = _parse_cell(raw, line_no, name)
            rows.append(parsed)
    if not rows:
        raise EmptyFile(f"{path} has no data rows")
    X = np.array([[r[c] for c in x_cols] for r in rows], dtype=np.float64)
    Psi = np.array([[r[c] for c in psi_cols] for r in rows], dtype=np.float64)
    if schema.target is None:
        Y = np.zeros(len(rows))
        target_name = ""
    else:
        Y = np.array([r[schema.target] for r in rows], dtype=np.float64)
        target_name = schema.target
    ds = Dataset(X=X, Psi=Psi, Y=Y, x_names=tuple(x_cols),
                 psi_names=tuple(psi_cols), target_name=target_name)
    if schema.standardize or stats is not None:
        ds, _ = standardize(ds, stats)
    return ds


def _column_stats(m):
    mean = m.mean(axis=0)
    scale = m.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return mean, scale


def standardize(data, stats=None):
    """Shift and scale feature columns to mean 0, variance 1.

    Statistics come from this dataset unless stats is given, in which
    case they are applied unchanged (the train-then-test workflow).
    Constant columns keep scale 1 so they map to all zeros. Targets are
    never touched. Returns the new dataset and the statistics used.
    """
    if stats is None:
        x_mean, x_scale = _column_stats(data.X)
        psi_mean, psi_scale = _column_stats(data.Psi)
        stats = FeatureStats(x_mean=x_mean, x_scale=x_scale,
                             psi_mean=psi_mean, psi_scale=psi_scale)
    X = (data.X - stats.x_mean) / stats.x_scale
    Psi = (data.Psi - stats.psi_mean) / stats.psi_scale
    out = Dataset(X=X, Psi=Psi, Y=data.Y, x_names=data.x_names,
                  psi_names=data.psi_names, target_name=data.target_name,
                  standardization=stats)
    return out, stats


def save_csv(data, path):
    """Write a dataset back to CSV with round-trippable float text."""
    columns = []
    seen = set()
    for name in list(data.x_names) + list(data.psi_names) + [data.target_name]:
        if name not in seen:
            seen.add(name)
            columns.append(name)
    by_name = {}
    for i, name in enumerate(data.x_names):
        by_name[name] = data.X[:, i]
    for i, name in enumerate(data.psi_names):
        by_name.setdefault(name, data.Psi[:, i])
    by_name[data.target_name] = data.Y
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for i in range(data.n):
            writer.writerow([repr(float(by_name[c][i])) for c in columns])


def take(data, rows):
    """Dataset restricted to the given row indices."""
    rows = np.asarray(rows)
    return Dataset(X=data.X[rows], Psi=data.Psi[rows], Y=data.Y[rows],
                   x_names=data.x_names, psi_names=data.psi_names,
                   target_name=data.target_name,
                   standardization=data.standardization)


def train_test_split(data, test_fraction, seed):
    """Deterministic shuffled partition; train gets ceil(n * (1 - f)) rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction={test_fraction} outside (0, 1)")
    n = data.n
    perm = np.random.default_rng(seed).permutation(n)
    n_train = math.ceil(n * (1.0 - test_fraction))
    if n_train == 0 or n_train == n:
        raise DegenerateSplit(f"n={n}, test_fraction={test_fraction} "
                              "leaves one side empty")
    return take(data, perm[:n_train]), take(data, perm[n_train:])


def mse(predictions, targets):
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise LengthMismatch(
            f"predictions {predictions.shape} vs targets {targets.shape}")
    if predictions.size == 0:
        raise LengthMismatch("mse needs at least one value")
    diff = predictions - targets
    return float(diff @ diff / len(diff))


def _require(condition, message):
    if not condition:
        raise SchemaViolation(message)


def _validate_node(obj, w_len):
    _require(isinstance(obj, dict), "node must be an object")
    kind = obj.get("type")
    if kind == "leaf":
        w = obj.get("w")
        _require(isinstance(w, list) and len(w) > 0, "leaf w must be a non-empty list")
        _require(all(isinstance(v, (int, float)) for v in w), "leaf w must be numeric")
        if w_len is not None:
            _require(len(w) == w_len, f"leaf w has length {len(w)}, expected {w_len}")
        _require(isinstance(obj.get("n"), int) and obj["n"] >= 0, "leaf n must be a count")
        _require(isinstance(obj.get("loss"), (int, float)), "leaf loss must be numeric")
    elif kind == "interior":
        _require(isinstance(obj.get("feature"), int) and obj["feature"] >= 0,
                 "interior feature must be a nonnegative integer")
        _require(isinstance(obj.get("threshold"), (int, float)),
                 "interior threshold must be numeric")
        _validate_node(obj.get("ge"), w_len)
        _validate_node(obj.get("lt"), w_len)
    else:
        raise SchemaViolation(f"unknown node type {kind!r}")


def model_to_dict(model):
    """JSON-ready dict for any trained model (piecewise-linear or baseline)."""
    if isinstance(model, baselines.ConstantTreeModel):
        return baselines.model_to_dict(model)
    if isinstance(model, tree.PlrtModel):
        return tree.model_to_dict(model)
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(obj):
    """Inverse of model_to_dict; the criterion tag dispatches baseline trees."""
    if obj.get("criterion") is None:
        return tree.model_from_dict(obj)
    return baselines.model_from_dict(obj)


def save_model(model, path):
    obj = model_to_dict(model)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def load_model(path):
    """Load a model JSON written by save_model, validating version and
    structure first. The criterion tag dispatches baseline trees."""
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"{path} is not valid JSON: {exc}") from None
    _require(isinstance(obj, dict), "model file must hold an object")
    version = obj.get("format_version")
    _require(version is not None, "missing format_version")
    if version != 1:
        raise VersionMismatch(f"format_version {version!r}, expected 1")
    for key in ("d", "D", "bias", "config", "root"):
        _require(key in obj, f"missing key {key!r}")
    _require(isinstance(obj["d"], int) and obj["d"] >= 1, "d must be a positive integer")
    _require(isinstance(obj["D"], int) and obj["D"] >= 1, "D must be a positive integer")
    _require(isinstance(obj["bias"], bool), "bias must be a boolean")
    _require(isinstance(obj["config"], dict), "config must be an object")
    criterion = obj.get("criterion")
    if criterion == "cart":
        w_len = 1
    elif criterion == "m5" or criterion is None:
        w_len = obj["d"] + (1 if obj["bias"] else 0)
    else:
        raise SchemaViolation(f"unknown criterion {criterion!r}")
    _validate_node(obj["root"], w_len)
    try:
        return model_from_dict(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolation(f"malformed model config: {exc}") from None
