import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from plrt_lab import cli


def write_training_csv(path, n=120, seed=50):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(n)
    b = rng.standard_normal(n)
    y = np.where(a >= 0.0, 2.0 * a - b + 1.0, -a + 3.0 * b - 2.0)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["a", "b", "y"])
        for row in zip(a, b, y):
            writer.writerow([repr(float(v)) for v in row])
    return str(path)


def run(args):
    return cli.main([str(a) for a in args])


def train_args(data, out, **extra):
    args = ["train", "--data", data, "--target", "y", "--out", out,
            "--depth", "2", "--gamma", "0.5"]
    for key, value in extra.items():
        args.extend([f"--{key.replace('_', '-')}", str(value)])
    return args


def test_train_writes_model_and_summary(tmp_path, capsys):
    data = write_training_csv(tmp_path / "train.csv")
    out = str(tmp_path / "model.json")
    assert run(train_args(data, out)) == 0
    printed = capsys.readouterr().out
    assert "wrote" in printed and "model.json" in printed

    model = json.load(open(out, encoding="utf-8"))
    assert model["format_version"] == 1
    assert model["d"] == 2 and model["D"] == 2

    summary = json.load(open(out[:-5] + ".summary.json", encoding="utf-8"))
    assert summary["algo"] == "plrt"
    assert summary["n"] == 120 and summary["d"] == 2 and summary["D"] == 2
    assert summary["depth"] >= 1
    assert summary["leaf_count"] >= 2
    assert summary["train_seconds"] > 0.0
    assert len(summary["per_depth_train_mse"]) == summary["depth"] + 1
    mses = summary["per_depth_train_mse"]
    assert mses[-1] <= mses[0]
    assert summary["counters"]["scanned"] > 0


def test_train_custom_summary_path_and_algos(tmp_path):
    data = write_training_csv(tmp_path / "train.csv")
    for algo in ("cart", "m5"):
        out = str(tmp_path / f"{algo}.json")
        summary_path = str(tmp_path / f"{algo}_sum.json")
        assert run(train_args(data, out, algo=algo) +
                   ["--summary", summary_path]) == 0
        summary = json.load(open(summary_path, encoding="utf-8"))
        assert summary["algo"] == algo
        assert summary["counters"] == {}
        model = json.load(open(out, encoding="utf-8"))
        want_criterion = "cart" if algo == "cart" else "m5"
        assert model["criterion"] == want_criterion


def test_predict_round_trip(tmp_path, capsys):
    data = write_training_csv(tmp_path / "train.csv")
    out = str(tmp_path / "model.json")
    run(train_args(data, out))
    capsys.readouterr()

    preds_path = str(tmp_path / "preds.csv")
    rc = run(["predict", "--data", data, "--model", out,
              "--features", "a,b", "--out", preds_path])
    assert rc == 0
    assert "120 predictions" in capsys.readouterr().out
    with open(preds_path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["prediction"]
    assert len(rows) == 121
    values = np.array([float(r[0]) for r in rows[1:]])
    assert np.all(np.isfinite(values))

    # passing --target drops the label column, same effect as --features
    rc = run(["predict", "--data", data, "--model", out, "--target", "y",
              "--out", str(tmp_path / "preds2.csv")])
    assert rc == 0


def test_predict_dimension_mismatch_is_a_usage_error(tmp_path, capsys):
    data = write_training_csv(tmp_path / "train.csv")
    out = str(tmp_path / "model.json")
    run(train_args(data, out))
    capsys.readouterr()

    # without --target or --features all three columns feed a 2-feature model
    rc = run(["predict", "--data", data, "--model", out,
              "--out", str(tmp_path / "preds.csv")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "--features" in err


def test_eval_prints_mse_per_model(tmp_path, capsys):
    data = write_training_csv(tmp_path / "train.csv")
    plrt_path = str(tmp_path / "plrt.json")
    cart_path = str(tmp_path / "cart.json")
    run(train_args(data, plrt_path))
    run(train_args(data, cart_path, algo="cart"))
    capsys.readouterr()

    assert run(["eval", "--data", data, "--target", "y",
                "--model", plrt_path, cart_path]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2
    reported = {}
    for line in lines:
        path, _, tail = line.partition(": mse=")
        reported[path] = float(tail)
    assert reported[plrt_path] < reported[cart_path]


def test_bounds_prints_report_json(tmp_path, capsys):
    data = write_training_csv(tmp_path / "train.csv")
    out = str(tmp_path / "report.json")
    rc = run(["bounds", "--data", data, "--target", "y",
              "--W", "2.0", "--ell", "4", "--norm", "l1", "--out", out])
    assert rc == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["norm_type"] == "l1"
    assert printed["W"] == 2.0 and printed["ell"] == 4
    assert printed["rademacher_bound"] > 0.0
    assert printed["gap_bound"] > printed["rademacher_bound"]
    assert json.load(open(out, encoding="utf-8")) == printed


def test_stability_command_and_seed_env(tmp_path, capsys, monkeypatch):
    rc = run(["stability", "--d", "4", "--N", "64", "--seed", "7"])
    assert rc == 0
    explicit = json.loads(capsys.readouterr().out)
    assert explicit["d"] == 4 and explicit["N"] == 64
    assert explicit["rel_frobenius_error"] < 1e-9
    assert explicit["condition_number"] >= 1.0 - 1e-12

    monkeypatch.setenv("PLRT_SEED", "7")
    assert run(["stability", "--d", "4", "--N", "64"]) == 0
    defaulted = json.loads(capsys.readouterr().out)
    assert defaulted == explicit


def test_bench_smoke(tmp_path, capsys):
    out = str(tmp_path / "bench.json")
    rc = run(["bench", "--n", "200", "--d", "2", "--D", "2", "--depth", "1",
              "--skip-kernels", "--out", out])
    assert rc == 0
    table = capsys.readouterr().out
    assert table.splitlines()[0].startswith("strategy")
    for name in ("none", "exact", "approx-min", "approx-max"):
        assert name in table
    payload = json.load(open(out, encoding="utf-8"))
    assert "strategies" in payload and "kernels" not in payload
    assert len(payload["strategies"]["results"]) == 4


def test_bench_requires_target_with_data(tmp_path, capsys):
    data = write_training_csv(tmp_path / "train.csv")
    rc = run(["bench", "--data", data])
    assert rc == 2
    assert "--target" in capsys.readouterr().err


def test_error_paths_return_one(tmp_path, capsys):
    missing = str(tmp_path / "nope.csv")
    rc = run(["train", "--data", missing, "--target", "y",
              "--out", str(tmp_path / "m.json")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err

    data = write_training_csv(tmp_path / "train.csv")
    rc = run(["train", "--data", data, "--target", "y",
              "--features", "a,missing", "--out", str(tmp_path / "m.json")])
    assert rc == 1
    assert "missing" in capsys.readouterr().err


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "plrt_lab.cli", "--help"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "train" in proc.stdout and "bench" in proc.stdout
