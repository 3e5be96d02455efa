"""Command-line interface wiring the library into batch workflows.

Subcommands: train, predict, eval, bounds, stability, bench. Every run is
deterministic given identical flags, files, and seed; the PLRT_SEED
environment variable overrides the default seed 0.
"""

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import baselines, bounds, dataio, harness, tree
from .errors import DimensionMismatch, EmptyFile, PlrtError
from .splitsearch import SplitConfig, Strategy

_STRATEGY_BY_FLAG = {
    "none": Strategy.NO_SPEEDUP,
    "exact": Strategy.EXACT,
    "approx-min": Strategy.APPROX_MIN,
    "approx-max": Strategy.APPROX_MAX,
}


def _default_seed():
    return int(os.environ.get("PLRT_SEED", "0"))


def _split_list(text):
    return [c.strip() for c in text.split(",") if c.strip()]


def _read_header(path):
    with open(path, newline="", encoding="utf-8") as fh:
        try:
            return next(csv.reader(fh))
        except StopIteration:
            raise EmptyFile(f"{path} has no header row") from None


def _build_schema(args, need_target=True):
    target = getattr(args, "target", None)
    if need_target and target is None:
        raise UsageError("--target is required here")
    header = _read_header(args.data)
    if args.features:
        features = _split_list(args.features)
    else:
        features = [c for c in header if c != target]
        if not features:
            raise UsageError(f"{args.data} has no feature columns")
    split_features = _split_list(args.split_features) if args.split_features else None
    return dataio.SchemaConfig(
        target=target, regression_columns=features,
        split_columns=split_features, standardize=args.standardize)


class UsageError(Exception):
    pass


def _add_schema_flags(parser, target_required=True):
    parser.add_argument("--data", required=True, help="input CSV file")
    parser.add_argument("--target", required=target_required,
                        help="name of the target column")
    parser.add_argument("--features",
                        help="comma-separated regression columns (default: all but target)")
    parser.add_argument("--split-features",
                        help="comma-separated split columns (default: the regression columns)")
    parser.add_argument("--standardize", action="store_true",
                        help="shift/scale feature columns to mean 0, variance 1")


def _make_parser():
    parser = argparse.ArgumentParser(
        prog="plrt-lab",
        description="Piecewise-linear regression trees with exact split optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit a model and write it as JSON")
    _add_schema_flags(p_train)
    p_train.add_argument("--algo", choices=["plrt", "cart", "m5"], default="plrt")
    p_train.add_argument("--depth", type=int, default=10, help="maximum tree depth")
    p_train.add_argument("--gamma", type=float, default=1.0,
                         help="ridge strength for node and leaf models")
    p_train.add_argument("--lasso-lambda", type=float, default=0.0,
                         help="when positive, refit leaves with an l1 penalty of this strength")
    p_train.add_argument("--min-leaf", type=int, default=1,
                         help="minimum samples per side of any split")
    p_train.add_argument("--min-decrease", type=float, default=0.0,
                         help="minimum loss decrease to accept a split")
    p_train.add_argument("--strategy", choices=sorted(_STRATEGY_BY_FLAG), default="exact",
                         help="split-scan pruning strategy")
    p_train.add_argument("--select-s", type=int, default=None,
                         help="restrict regression features to the s most target-correlated")
    p_train.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                         help="scan parallelism (results are identical at any value)")
    p_train.add_argument("--no-bias", action="store_true",
                         help="drop the intercept column from linear models")
    p_train.add_argument("--out", required=True, help="output model JSON path")
    p_train.add_argument("--summary", default=None,
                         help="training-summary JSON path (default: <out>.summary.json)")

    p_predict = sub.add_parser("predict", help="apply a model to a CSV file")
    _add_schema_flags(p_predict, target_required=False)
    p_predict.add_argument("--model", required=True, help="model JSON path")
    p_predict.add_argument("--out", required=True, help="output predictions CSV path")

    p_eval = sub.add_parser("eval", help="print the MSE of one or more models")
    _add_schema_flags(p_eval)
    p_eval.add_argument("--model", required=True, nargs="+", help="model JSON path(s)")

    p_bounds = sub.add_parser("bounds", help="evaluate generalization bounds on a dataset")
    _add_schema_flags(p_bounds)
    p_bounds.add_argument("--W", type=float, required=True, help="weight-norm constraint")
    p_bounds.add_argument("--ell", type=int, required=True, help="leaf count")
    p_bounds.add_argument("--delta", type=float, default=0.05, help="confidence level")
    p_bounds.add_argument("--norm", choices=["l2", "l1"], default="l2")
    p_bounds.add_argument("--select-s", type=int, default=None,
                          help="selected-variable count for the selection bound (l1 only)")
    p_bounds.add_argument("--F", type=float, default=None,
                          help="predictor sup bound (default: W * K_hat)")
    p_bounds.add_argument("--R", type=float, default=None,
                          help="target bound (default: max |y|)")
    p_bounds.add_argument("--out", default=None, help="also write the report JSON here")

    p_stab = sub.add_parser("stability",
                            help="compare rank-one updated inverses against fresh solves")
    p_stab.add_argument("--d", type=int, default=64)
    p_stab.add_argument("--N", type=int, default=4096)
    p_stab.add_argument("--seed", type=int, default=_default_seed())
    p_stab.add_argument("--out", default=None)

    p_bench = sub.add_parser("bench",
                             help="benchmark pruning strategies and scan kernels")
    p_bench.add_argument("--data", default=None, help="CSV file (default: synthetic data)")
    p_bench.add_argument("--target", default=None)
    p_bench.add_argument("--features", default=None)
    p_bench.add_argument("--split-features", default=None)
    p_bench.add_argument("--standardize", action="store_true")
    p_bench.add_argument("--n", type=int, default=5000, help="synthetic rows")
    p_bench.add_argument("--d", type=int, default=8, help="synthetic regression dimension")
    p_bench.add_argument("--D", type=int, default=8, help="synthetic split dimension")
    p_bench.add_argument("--depth", type=int, default=3)
    p_bench.add_argument("--gamma", type=float, default=1.0)
    p_bench.add_argument("--min-leaf", type=int, default=1)
    p_bench.add_argument("--repeats", type=int, default=1)
    p_bench.add_argument("--seed", type=int, default=_default_seed())
    p_bench.add_argument("--skip-kernels", action="store_true",
                         help="skip the Python-vs-compiled kernel comparison")
    p_bench.add_argument("--out", default=None, help="also write the report JSON here")
    return parser


def _train_config(args):
    strategy = _STRATEGY_BY_FLAG[args.strategy]
    split_config = SplitConfig(strategy=strategy, min_leaf_size=args.min_leaf,
                               threads=max(1, args.threads))
    leaf_penalty = "lasso" if args.lasso_lambda > 0.0 else "ridge"
    return tree.TrainConfig(
        max_depth=args.depth, min_leaf_size=args.min_leaf,
        min_loss_decrease=args.min_decrease, gamma=args.gamma,
        leaf_penalty=leaf_penalty, lasso_lam=args.lasso_lambda,
        split_config=split_config, root_feature_selection=args.select_s,
        bias=not args.no_bias)


def _per_depth_mse(model, data, max_depth):
    out = []
    for cap in range(max_depth + 1):
        if isinstance(model, baselines.ConstantTreeModel):
            preds = baselines.predict_batch_truncated(model, data.X, data.Psi, cap)
        else:
            preds = tree.predict_batch_truncated(model, data.X, data.Psi, cap)
        out.append(dataio.mse(preds, data.Y))
    return out


def _cmd_train(args):
    schema = _build_schema(args)
    data = dataio.load_csv(args.data, schema)
    config = _train_config(args)
    start = time.perf_counter()
    if args.algo == "plrt":
        model = tree.train_plrt(data, config)
        counters = dict(model.counters)
    elif args.algo == "cart":
        model = baselines.train_cart(data, config)
        counters = {}
    else:
        model = baselines.train_m5(data, config)
        counters = {}
    train_seconds = time.perf_counter() - start
    dataio.save_model(model, args.out)
    depth = tree.tree_depth(model.root)
    summary = {
        "algo": args.algo,
        "n": data.n, "d": data.d, "D": data.D,
        "depth": depth,
        "leaf_count": tree.leaf_count(model.root),
        "train_seconds": train_seconds,
        "per_depth_train_mse": _per_depth_mse(model, data, depth),
        "counters": counters,
    }
    summary_path = args.summary
    if summary_path is None:
        base = args.out[:-5] if args.out.endswith(".json") else args.out
        summary_path = base + ".summary.json"
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(f"wrote {args.out} ({summary['leaf_count']} leaves, depth {depth}) "
          f"and {summary_path}")
    return 0


def _cmd_predict(args):
    model = dataio.load_model(args.model)
    schema = _build_schema(args, need_target=False)
    data = dataio.load_csv(args.data, schema)
    try:
        if isinstance(model, baselines.ConstantTreeModel):
            preds = baselines.predict_batch(model, data.X, data.Psi)
        else:
            preds = tree.predict_batch(model, data.X, data.Psi)
    except DimensionMismatch as exc:
        raise UsageError(
            f"{exc}; name the model's input columns with --features "
            "(or pass --target to drop the label column)") from None
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["prediction"])
        for value in preds:
            writer.writerow([repr(float(value))])
    print(f"wrote {len(preds)} predictions to {args.out}")
    return 0


def _cmd_eval(args):
    schema = _build_schema(args)
    data = dataio.load_csv(args.data, schema)
    for path in args.model:
        model = dataio.load_model(path)
        if isinstance(model, baselines.ConstantTreeModel):
            preds = baselines.predict_batch(model, data.X, data.Psi)
        else:
            preds = tree.predict_batch(model, data.X, data.Psi)
        print(f"{path}: mse={dataio.mse(preds, data.Y)!r}")
    return 0


def _cmd_bounds(args):
    schema = _build_schema(args)
    data = dataio.load_csv(args.data, schema)
    norm = bounds.NormType.L1 if args.norm == "l1" else bounds.NormType.L2
    inputs = bounds.BoundInputs(W=args.W, ell=args.ell, delta=args.delta,
                                norm_type=norm, s=args.select_s,
                                F=args.F, R=args.R)
    report = bounds.bound_report(data, inputs)
    payload = json.dumps(bounds.report_to_dict(report), indent=2)
    print(payload)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    return 0


def _cmd_stability(args):
    report = harness.stability_report(args.d, args.N, args.seed)
    payload = json.dumps(harness.stability_to_dict(report), indent=2)
    print(payload)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    return 0


def _synthetic_dataset(n, d, D, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    Psi = X[:, :D].copy() if D <= d else np.hstack(
        [X, rng.standard_normal((n, D - d))])
    w_true = rng.standard_normal(d)
    regime = Psi[:, 0] >= 0.0
    Y = X @ w_true + np.where(regime, 2.0, -2.0) + 0.1 * rng.standard_normal(n)
    names = tuple(f"x{i}" for i in range(d))
    psi_names = tuple(f"p{i}" for i in range(D))
    return dataio.Dataset(X=X, Psi=Psi, Y=Y, x_names=names,
                          psi_names=psi_names, target_name="y")


def _cmd_bench(args):
    if args.data is not None:
        if args.target is None:
            raise UsageError("--target is required with --data")
        schema = _build_schema(args)
        data = dataio.load_csv(args.data, schema)
    else:
        data = _synthetic_dataset(args.n, args.d, args.D, args.seed)
    config = tree.TrainConfig(
        max_depth=args.depth, min_leaf_size=args.min_leaf, gamma=args.gamma,
        split_config=SplitConfig(min_leaf_size=args.min_leaf, threads=1))
    report = harness.speedup_benchmark(data, config, repeats=args.repeats)
    payload = {"strategies": harness.bench_to_dict(report)}
    print(harness.format_bench_table(report))
    if not args.skip_kernels:
        kernels = harness.backend_benchmark(seed=args.seed)
        payload["kernels"] = harness.backend_to_dict(kernels)
        if kernels.compiled_time is None:
            print("kernels: compiled scan not built; python kernel "
                  f"{kernels.python_time:.4f}s")
        else:
            print(f"kernels: python {kernels.python_time:.4f}s, compiled "
                  f"{kernels.compiled_time:.4f}s, speedup {kernels.speedup:.1f}x, "
                  f"agree={kernels.agree}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "predict": _cmd_predict,
    "eval": _cmd_eval,
    "bounds": _cmd_bounds,
    "stability": _cmd_stability,
    "bench": _cmd_bench,
}


def main(argv=None):
    parser = _make_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}; see plrt-lab {args.command} --help", file=sys.stderr)
        return 2
    except (PlrtError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
