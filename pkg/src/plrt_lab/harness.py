"""Verification and benchmarking utilities.

Three jobs live here: a brute-force split oracle that recomputes every
candidate split from scratch, a numerical-stability experiment comparing
rank-one-maintained inverses against fresh Cholesky solves, and wall-time
benchmarks for the pruning strategies and the two scan kernels.
"""

import json
import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _scan, dataio, tree
from .errors import InstanceTooLarge, NotPositiveDefinite
from .linalg import InverseState, condition_number, rank_one_update, spd_inverse, spd_solve
from .splitsearch import SplitDecision, Strategy
from .regress import FitResult

ORACLE_MAX_ROWS = 200


@dataclass
class StabilityReport:
    d: int
    N: int
    rel_frobenius_error: float
    angle_degrees: float
    condition_number: float


@dataclass
class StrategyResult:
    strategy: str
    wall_time: float
    scanned_count: int
    pruned_count: int
    leaf_count: int
    train_mse: float
    test_mse: Optional[float]
    matches_reference: bool


@dataclass
class BenchReport:
    n: int
    d: int
    D: int
    results: list


@dataclass
class BackendBench:
    n: int
    d: int
    python_time: float
    compiled_time: Optional[float]
    speedup: Optional[float]
    agree: Optional[bool]


def _solve_side(X, Y, lam, w0):
    """From-scratch ridge solve and direct-sum loss, or None when the
    normal matrix is not positive definite (possible only at lam == 0)."""
    dim = X.shape[1]
    S = X.T @ X
    if lam > 0.0:
        S = S + lam * np.eye(dim)
    try:
        w = spd_solve(S, X.T @ Y + lam * w0)
    except NotPositiveDefinite:
        return None
    resid = Y - X @ w
    loss = float(resid @ resid)
    if lam > 0.0:
        diff = w - w0
        loss += lam * float(diff @ diff)
    return FitResult(w=w, loss=loss)


def brute_force_split_oracle(ctx, data):
    """Exhaustive reference split search for small nodes.

    Every admissible (feature, rank) pair is scored by solving both ridge
    problems from scratch, with the same ordering, threshold placement,
    and tie rules as the scan kernels. Returns None when no admissible
    split has two solvable sides.
    """
    idx = np.asarray(ctx.indices)
    n = len(idx)
    if n > ORACLE_MAX_ROWS:
        raise InstanceTooLarge(f"oracle capped at {ORACLE_MAX_ROWS} rows, got {n}")
    min_leaf = ctx.config.min_leaf_size
    if n < 2 * min_leaf:
        return None
    X = np.asarray(data.X, dtype=np.float64)[idx]
    Psi = np.asarray(data.Psi, dtype=np.float64)[idx]
    Y = np.asarray(data.Y, dtype=np.float64)[idx]
    w0 = np.asarray(ctx.w0, dtype=np.float64)
    lam = float(ctx.lam)
    scanned = 0
    best = None  # (total, feature, rank, threshold, order, fits)
    for f in range(Psi.shape[1]):
        psi_col = Psi[:, f]
        order = np.argsort(-psi_col, kind="stable")
        psi_s = psi_col[order]
        Xs = X[order]
        Ys = Y[order]
        for m in range(min_leaf, n - min_leaf + 1):
            if psi_s[m - 1] <= psi_s[m]:
                continue
            scanned += 1
            left = _solve_side(Xs[:m], Ys[:m], lam, w0)
            right = _solve_side(Xs[m:], Ys[m:], lam, w0)
            if left is None or right is None:
                continue
            total = left.loss + right.loss
            if best is None or total < best[0]:
                threshold = 0.5 * (psi_s[m - 1] + psi_s[m])
                best = (total, f, m, float(threshold), order, (left, right))
    if best is None:
        return None
    total, f, m, threshold, order, (left, right) = best
    return SplitDecision(
        feature=f, threshold=threshold, total_loss=total,
        left_fit=left, right_fit=right,
        scanned_count=scanned, pruned_count=0, rank=m,
        left_indices=idx[order[:m]], right_indices=idx[order[m:]],
    )


def _vector_angle_degrees(a, b):
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    cosine = float(a @ b) / (na * nb)
    return float(np.degrees(np.arccos(np.clip(cosine, -1.0, 1.0))))


def stability_report(d, N, seed=0):
    """Compare Lambda = inv(X^T X + I) maintained by N rank-one updates
    against a fresh Cholesky-based inverse, on seeded standard-normal data.

    Reports the relative Frobenius error between the two inverses, the
    angle between the two solutions of Lambda (X^T Y), and the condition
    number (spectral) of the fresh inverse.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((N, d))
    Y = rng.standard_normal(N)
    state = InverseState.identity(d)
    for i in range(N):
        rank_one_update(state, X[i], 1.0)
    lam_r1 = state.inv
    lam_ch = spd_inverse(X.T @ X + np.eye(d))
    b = X.T @ Y
    w_ch = lam_ch @ b
    w_r1 = lam_r1 @ b
    denom = float(np.linalg.norm(lam_ch))
    rel = float(np.linalg.norm(lam_ch - lam_r1)) / denom
    return StabilityReport(
        d=d, N=N,
        rel_frobenius_error=rel,
        angle_degrees=_vector_angle_degrees(w_ch, w_r1),
        condition_number=float(condition_number(lam_ch)),
    )


def _model_json(model):
    return json.dumps(tree.model_to_dict(model), sort_keys=True)


def speedup_benchmark(data, config, strategies=None, repeats=1, test_data=None):
    """Train one tree per pruning strategy and compare work counters,
    wall times, and resulting models.

    Scan parallelism is pinned to one thread so counters are
    deterministic. The exact strategy must reproduce the no-speedup model
    byte for byte; the approximate strategies are only reported against it.
    """
    if strategies is None:
        strategies = [Strategy.NO_SPEEDUP, Strategy.EXACT,
                      Strategy.APPROX_MIN, Strategy.APPROX_MAX]
    base_split = replace(config.split_config, threads=1)

    def run(strategy):
        cfg = replace(config, split_config=replace(base_split, strategy=strategy))
        best_time = None
        model = None
        for _ in range(max(1, repeats)):
            start = time.perf_counter()
            model = tree.train_plrt(data, cfg)
            elapsed = time.perf_counter() - start
            if best_time is None or elapsed < best_time:
                best_time = elapsed
        return model, best_time

    wanted = list(strategies)
    reference = None if Strategy.NO_SPEEDUP in wanted else run(Strategy.NO_SPEEDUP)[0]
    results = []
    models = {}
    for strategy in wanted:
        model, elapsed = run(strategy)
        models[strategy] = (model, elapsed)
        if strategy == Strategy.NO_SPEEDUP:
            reference = model
    ref_json = _model_json(reference) if reference is not None else None
    for strategy in wanted:
        model, elapsed = models[strategy]
        payload = _model_json(model)
        matches = payload == ref_json if ref_json is not None else True
        if strategy == Strategy.EXACT and not matches:
            raise AssertionError(
                "exact strategy produced a different model than no-speedup")
        preds = tree.predict_batch(model, data.X, data.Psi)
        train_mse = dataio.mse(preds, data.Y)
        test_mse = None
        if test_data is not None:
            test_preds = tree.predict_batch(model, test_data.X, test_data.Psi)
            test_mse = dataio.mse(test_preds, test_data.Y)
        results.append(StrategyResult(
            strategy=strategy.value,
            wall_time=elapsed,
            scanned_count=model.counters["scanned"],
            pruned_count=model.counters["pruned"],
            leaf_count=tree.leaf_count(model.root),
            train_mse=train_mse,
            test_mse=test_mse,
            matches_reference=matches,
        ))
    return BenchReport(n=data.X.shape[0], d=data.X.shape[1],
                       D=data.Psi.shape[1], results=results)


def backend_benchmark(n=2000, d=8, seed=0, repeats=3):
    """Time one full-feature scan in the pure-Python kernel and, when
    built, the compiled kernel, on identical presorted inputs."""
    from ._scan import pykernel
    try:
        from ._scan import cykernel
    except ImportError:
        cykernel = None
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    Y = rng.standard_normal(n)
    psi = X[:, 0].copy()
    order = np.argsort(-psi, kind="stable")
    Xs = np.ascontiguousarray(X[order])
    Ys = np.ascontiguousarray(Y[order])
    splittable = np.zeros(n, dtype=np.uint8)
    splittable[1:n] = 1
    w0 = np.zeros(d)

    def time_kernel(kernel):
        best = None
        result = None
        for _ in range(max(1, repeats)):
            out_l = np.full(n, np.nan)
            out_r = np.full(n, np.nan)
            start = time.perf_counter()
            result = kernel.scan_feature(
                Xs, Ys, splittable, 1.0, w0, 1, _scan.STRAT_EXACT, True,
                np.inf, out_l, out_r)
            elapsed = time.perf_counter() - start
            if best is None or elapsed < best:
                best = elapsed
        return best, result

    py_time, py_result = time_kernel(pykernel)
    if cykernel is None:
        return BackendBench(n=n, d=d, python_time=py_time, compiled_time=None,
                            speedup=None, agree=None)
    cy_time, cy_result = time_kernel(cykernel)
    agree = (py_result[0] == cy_result[0]
             and np.isclose(py_result[1], cy_result[1], rtol=1e-9, atol=1e-12))
    return BackendBench(n=n, d=d, python_time=py_time, compiled_time=cy_time,
                        speedup=py_time / cy_time if cy_time > 0 else None,
                        agree=bool(agree))


def stability_to_dict(report):
    return {
        "d": report.d, "N": report.N,
        "rel_frobenius_error": report.rel_frobenius_error,
        "angle_degrees": report.angle_degrees,
        "condition_number": report.condition_number,
    }


def bench_to_dict(report):
    return {
        "n": report.n, "d": report.d, "D": report.D,
        "results": [{
            "strategy": r.strategy,
            "wall_time": r.wall_time,
            "scanned_count": r.scanned_count,
            "pruned_count": r.pruned_count,
            "leaf_count": r.leaf_count,
            "train_mse": r.train_mse,
            "test_mse": r.test_mse,
            "matches_reference": r.matches_reference,
        } for r in report.results],
    }


def backend_to_dict(report):
    return {
        "n": report.n, "d": report.d,
        "python_time": report.python_time,
        "compiled_time": report.compiled_time,
        "speedup": report.speedup,
        "agree": report.agree,
    }


def format_bench_table(report):
    """Aligned plain-text table, one row per strategy."""
    headers = ["strategy", "wall_s", "scanned", "pruned", "leaves",
               "train_mse", "test_mse", "matches"]
    rows = []
    for r in report.results:
        rows.append([
            r.strategy,
            f"{r.wall_time:.4f}",
            str(r.scanned_count),
            str(r.pruned_count),
            str(r.leaf_count),
            f"{r.train_mse:.6g}",
            "-" if r.test_mse is None else f"{r.test_mse:.6g}",
            "yes" if r.matches_reference else "NO",
        ])
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines)
