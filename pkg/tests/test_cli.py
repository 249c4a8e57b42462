import os

import numpy as np
import pytest

from doppel.cli import BENCH_COLUMNS, main
from doppel.onnx import parse


def test_no_args_prints_usage_and_exits_one(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_flag_exits_one(capsys):
    assert main(["fit", "--nonsense"]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_subcommand_exits_one(capsys):
    assert main(["frobnicate"]) == 1


def test_unwritable_out_path_exits_one(tmp_path, capsys):
    assert main(["dope", "--dataset", "iris", "--model", "logistic", "--seed", "0",
                 "--out", str(tmp_path / "no_such_dir" / "m")]) == 1
    assert "error" in capsys.readouterr().err


def test_missing_model_file_exits_one(capsys):
    assert main(["score", "--model", "/does/not/exist.json", "--dataset", "iris"]) == 1


def test_fit_prints_scores(capsys):
    assert main(["fit", "--dataset", "iris", "--model", "logistic", "--seed", "0"]) == 0
    out = capsys.readouterr().out
    assert "train" in out and "test" in out


def test_dope_save_and_export_onnx(tmp_path, capsys):
    stem = str(tmp_path / "m")
    assert main(["dope", "--dataset", "iris", "--model", "logistic",
                 "--seed", "0", "--out", stem]) == 0
    assert os.path.exists(f"{stem}.onnx")
    assert os.path.exists(f"{stem}.json")

    out_onnx = str(tmp_path / "re.onnx")
    assert main(["export-onnx", "--model", f"{stem}.json", "--out", out_onnx]) == 0
    graph = parse(open(out_onnx, "rb").read())
    assert graph.opset_version == 13


def test_score_and_predict_roundtrip(tmp_path, capsys):
    stem = str(tmp_path / "clf")
    main(["dope", "--dataset", "iris", "--model", "logistic", "--seed", "0", "--out", stem])
    capsys.readouterr()

    assert main(["score", "--model", f"{stem}.json", "--dataset", "iris", "--seed", "0"]) == 0
    out = capsys.readouterr().out.strip()
    assert out.startswith("[") and out.endswith("]")

    pred_path = str(tmp_path / "preds.csv")
    assert main(["predict", "--model", f"{stem}.json", "--dataset", "iris",
                 "--out", pred_path]) == 0
    lines = open(pred_path).read().strip().splitlines()
    assert lines[0] == "prediction"
    assert len(lines) == 151  # header + one row per iris sample


def test_explain_command_renders_path(tmp_path, capsys):
    stem = str(tmp_path / "tree")
    main(["dope", "--dataset", "iris", "--model", "decision_tree", "--seed", "0", "--out", stem])
    capsys.readouterr()
    assert main(["explain", "--model", f"{stem}.json", "--dataset", "iris",
                 "--index", "3", "--seed", "0"]) == 0
    out = capsys.readouterr().out
    assert "=>" in out
    assert "fidelity=" in out


def test_explain_index_out_of_range(tmp_path, capsys):
    stem = str(tmp_path / "t2")
    main(["dope", "--dataset", "iris", "--model", "logistic", "--seed", "0", "--out", stem])
    capsys.readouterr()
    assert main(["explain", "--model", f"{stem}.json", "--dataset", "iris",
                 "--index", "999"]) == 1


def test_dope_with_params_grid(capsys):
    assert main([
        "dope", "--dataset", "iris", "--model", "logistic", "--seed", "0",
        "--params", '{"optimizer":{"grid_search":["adam","nadam"]}}',
        "--strategy", "approximate",
    ]) == 0
    out = capsys.readouterr().out
    assert "doped test" in out


def test_dope_universal_strategy_regression(capsys):
    assert main([
        "dope", "--dataset", "diabetes", "--model", "linear",
        "--strategy", "universal", "--seed", "0",
    ]) == 0
    out = capsys.readouterr().out
    assert "doped test" in out


def test_env_seed_fallback(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("DOPPEL_SEED", "3")
    out1 = str(tmp_path / "a.csv")
    assert main(["bench", "--out", out1]) == 0
    rows = open(out1).read().splitlines()
    assert rows[1].split(",")[4] == "3"


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "conf.toml"
    cfg.write_text('dataset = "iris"\nmodel = "logistic"\nseed = 2\n', encoding="utf-8")
    assert main(["fit", "--config", str(cfg)]) == 0
    capsys.readouterr()
    # The flag overrides the file's model without clearing the rest.
    assert main(["fit", "--config", str(cfg), "--model", "decision_tree"]) == 0


def test_bench_csv_schema_and_determinism(tmp_path):
    out1, out2 = str(tmp_path / "b1.csv"), str(tmp_path / "b2.csv")
    assert main(["bench", "--seed", "0", "--out", out1]) == 0
    assert main(["bench", "--seed", "0", "--out", out2]) == 0

    rows1 = open(out1).read().strip().splitlines()
    rows2 = open(out2).read().strip().splitlines()
    assert rows1[0] == ",".join(BENCH_COLUMNS)
    assert len(rows1) == 8  # header + 7 algorithms

    # Deterministic up to the wall-clock column.
    for a, b in zip(rows1, rows2):
        assert a.split(",")[:5] == b.split(",")[:5]

    metrics = [float(r.split(",")[2]) for r in rows1[1:]]
    assert all(np.isfinite(m) for m in metrics)
