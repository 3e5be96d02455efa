import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

import plrt_lab
from plrt_lab._scan import (STRAT_APPROX_MAX, STRAT_APPROX_MIN, STRAT_EXACT,
                            STRAT_NONE, pykernel)

cykernel = pytest.importorskip("plrt_lab._scan.cykernel")

ALL_CODES = (STRAT_NONE, STRAT_EXACT, STRAT_APPROX_MIN, STRAT_APPROX_MAX)


def run_both(Xs, Ys, splittable, lam, w0, min_leaf, code, per_sample, seed):
    outs = []
    n = len(Ys)
    for kernel in (pykernel, cykernel):
        out_l = np.full(n + 1, np.nan)
        out_r = np.full(n + 1, np.nan)
        res = kernel.scan_feature(
            np.ascontiguousarray(Xs), np.ascontiguousarray(Ys),
            np.ascontiguousarray(splittable), float(lam),
            np.ascontiguousarray(w0), int(min_leaf), int(code),
            int(per_sample), float(seed), out_l, out_r)
        outs.append((res, out_l, out_r))
    return outs


def sorted_instance(rng, n, d, duplicate_head=False):
    X = rng.standard_normal((n, d))
    if duplicate_head:
        X[1] = X[0]
    Y = rng.standard_normal(n)
    splittable = np.zeros(n + 1, dtype=np.uint8)
    splittable[1:n] = 1
    return X, Y, splittable


def test_compiled_backend_is_active_by_default():
    assert plrt_lab.scan_backend == "cython"
    assert cykernel.backend_name == "cython"
    assert pykernel.backend_name == "python"


def assert_scans_agree(res_a, res_b, l_a, l_b, r_a, r_b):
    """Same argmin, same counters, same evaluation pattern; losses may
    differ in the last bits because one side runs BLAS kernels and the
    other plain C loops."""
    assert res_a[0] == res_b[0]
    if math.isinf(res_a[1]):
        assert math.isinf(res_b[1])
    else:
        assert res_a[1] == pytest.approx(res_b[1], rel=1e-12)
    assert res_a[2:] == res_b[2:]
    for a, b in ((l_a, l_b), (r_a, r_b)):
        assert np.array_equal(np.isnan(a), np.isnan(b))
        finite = ~np.isnan(a)
        assert np.allclose(a[finite], b[finite], rtol=1e-9, atol=1e-12)


def test_kernels_agree_across_strategies_and_seeds():
    rng = np.random.default_rng(30)
    for trial in range(25):
        n = int(rng.integers(5, 60))
        d = int(rng.integers(1, 5))
        X, Y, splittable = sorted_instance(rng, n, d)
        lam = float(rng.choice([0.0, 0.3, 2.0]))
        w0 = rng.standard_normal(d) if lam > 0 else np.zeros(d)
        seed = float(rng.choice([math.inf, float(Y @ Y), 1e-3]))
        for code in ALL_CODES:
            (res_a, l_a, r_a), (res_b, l_b, r_b) = run_both(
                X, Y, splittable, lam, w0, 1, code, 1, seed)
            assert_scans_agree(res_a, res_b, l_a, l_b, r_a, r_b)


def test_kernels_agree_on_rank_deficient_cold_start():
    rng = np.random.default_rng(31)
    X, Y, splittable = sorted_instance(rng, 12, 3, duplicate_head=True)
    (res_a, l_a, r_a), (res_b, l_b, r_b) = run_both(
        X, Y, splittable, 0.0, np.zeros(3), 1, STRAT_NONE, 1, math.inf)
    assert np.isnan(l_a[1]) and np.isnan(l_a[2])
    assert_scans_agree(res_a, res_b, l_a, l_b, r_a, r_b)


def test_kernels_agree_on_counters_under_tight_seed():
    rng = np.random.default_rng(32)
    n = 400
    X = np.hstack((np.ones((n, 1)), rng.standard_normal((n, 1))))
    Y = np.where(np.arange(n) < n // 2, 5.0, -5.0) + 0.01 * rng.standard_normal(n)
    splittable = np.zeros(n + 1, dtype=np.uint8)
    splittable[1:n] = 1
    for code in (STRAT_EXACT, STRAT_APPROX_MIN, STRAT_APPROX_MAX):
        (res_a, l_a, r_a), (res_b, l_b, r_b) = run_both(
            X, Y, splittable, 1.0, np.zeros(2), 1, code, 1, 30.0)
        assert_scans_agree(res_a, res_b, l_a, l_b, r_a, r_b)
        assert res_a[3] > 0  # the tight seed really pruned something


def test_python_fallback_trains_byte_identical_model(tmp_path):
    """A subprocess with the fallback forced must serialize the same model."""
    script = r"""
import json, sys
import numpy as np
import plrt_lab

rng = np.random.default_rng(99)
n = 300
X = rng.standard_normal((n, 3))
Psi = rng.standard_normal((n, 2))
Y = X[:, 0] - 2.0 * X[:, 1] * (Psi[:, 0] > 0) + 0.1 * rng.standard_normal(n)
data = plrt_lab.Dataset(X=X, Psi=Psi, Y=Y, x_names=("a", "b", "c"),
                        psi_names=("p", "q"), target_name="y")
config = plrt_lab.TrainConfig(max_depth=3, gamma=0.5)
model = plrt_lab.train_plrt(data, config)
print(plrt_lab.scan_backend)
print(json.dumps(plrt_lab.model_to_dict(model), sort_keys=True))
"""
    outputs = {}
    for backend, env_value in (("cython", "0"), ("python", "1")):
        env = dict(os.environ, PLRT_PURE_SCAN=env_value)
        proc = subprocess.run([sys.executable, "-c", script], env=env,
                              capture_output=True, text=True, check=True)
        name, payload = proc.stdout.strip().split("\n", 1)
        assert name == backend
        outputs[backend] = payload
    assert outputs["cython"] == outputs["python"]


def test_backend_benchmark_reports_agreement():
    from plrt_lab.harness import backend_benchmark

    bench = backend_benchmark(n=400, d=4, seed=3, repeats=1)
    assert bench.agree is True
    assert bench.python_time > 0.0
    assert bench.compiled_time is not None and bench.compiled_time > 0.0
    assert bench.speedup == pytest.approx(bench.python_time / bench.compiled_time)
