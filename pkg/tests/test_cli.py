import json
from pathlib import Path

import pytest

from drugsens.cli import main


@pytest.fixture()
def workdir(tmp_path, mini_csv_path):
    cfg = {
        "data_path": str(mini_csv_path),
        "artifacts_dir": str(tmp_path / "artifacts"),
        "test_fraction": 0.2,
        "split_seed": 42,
        "seed": 7,
        "fixed_params": {"n_estimators": 15, "max_depth": 3, "learning_rate": 0.3},
        "param_space": {
            "max_depth": {"choice": [2, 3]},
            "learning_rate": {"low": 0.1, "high": 0.5},
        },
        "search_n_iter": 2,
        "search_k": 3,
        "cv_k": 3,
        "curve_counts": [5, 10],
        "curve_params": {"n_estimators": 10, "max_depth": 2, "learning_rate": 0.3},
        "top_k": 5,
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(cfg))
    return tmp_path, cfg_path


def run(cfg_path, *argv):
    return main(["--config", str(cfg_path), *argv])


def test_ingest_writes_split_artifacts(workdir):
    tmp, cfg = workdir
    assert run(cfg, "ingest") == 0
    out = tmp / "artifacts"
    assert (out / "schema.json").exists()
    assert (out / "train.csv").exists()
    assert (out / "test.csv").exists()
    split = json.loads((out / "split.json").read_text())
    assert split["format_version"] == 1
    assert split["config_hash"]
    assert len(split["test_row_ids"]) > 0


def test_train_writes_model_and_metrics(workdir):
    tmp, cfg = workdir
    assert run(cfg, "train") == 0
    out = tmp / "artifacts"
    model_doc = json.loads((out / "model.json").read_text())
    assert model_doc["format_version"] == 1
    metrics = json.loads((out / "metrics.json").read_text())
    assert "r2" in metrics["test_metrics"]


def test_evaluate_emits_k_folds_and_mean(workdir):
    tmp, cfg = workdir
    assert run(cfg, "evaluate", "--k", "5") == 0
    report = json.loads((tmp / "artifacts" / "cv_report.json").read_text())
    assert report["k"] == 5
    assert len(report["folds"]) == 5
    assert "mean" in report
    csv_lines = (tmp / "artifacts" / "cv_report.csv").read_text().splitlines()
    # comment envelope, header, 5 folds, mean row
    assert len(csv_lines) == 8
    assert csv_lines[-1].startswith("mean,")


def test_tune_then_train_with_best_params(workdir):
    tmp, cfg = workdir
    assert run(cfg, "tune") == 0
    out = tmp / "artifacts"
    best = json.loads((out / "best_params.json").read_text())
    trials = json.loads((out / "trials.json").read_text())
    assert len(trials["trials"]) == 2
    assert best["params"]["max_depth"] in (2, 3)
    assert run(cfg, "train", "--params-file", str(out / "best_params.json")) == 0


def test_curve_csv_columns(workdir):
    tmp, cfg = workdir
    assert run(cfg, "curve") == 0
    lines = (tmp / "artifacts" / "curve.csv").read_text().splitlines()
    assert lines[0].startswith("# format_version=")
    assert lines[1] == "n_estimators,r2,mae"
    assert len(lines) == 4


def test_explain_and_report_flow(workdir):
    tmp, cfg = workdir
    out = tmp / "artifacts"
    assert run(cfg, "train") == 0
    assert run(cfg, "explain", "--rows", "0,1") == 0
    doc = json.loads((out / "explanations.json").read_text())
    assert len(doc["explanations"]) == 2
    for entry in doc["explanations"]:
        total = entry["base_value"] + sum(c["shap"] for c in entry["contributions"])
        assert abs(total - entry["prediction"]) < 1e-6
    assert (out / "global_importance.csv").exists()

    assert run(cfg, "report", "--row", "1") == 0
    report = json.loads((out / "report_row1.json").read_text())
    assert "summary_text" not in report["report"]
    assert report["report"]["response"]["label"] in ("Sensitive", "Resistant")
    assert report["report"]["provenance"]["model_checksum"]


def test_missing_data_file_prints_json_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"data_path": str(tmp_path / "nope.csv")}))
    code = main(["--config", str(cfg), "ingest"])
    assert code == 1
    err = capsys.readouterr().err
    doc = json.loads(err.strip().splitlines()[-1])
    assert doc["error"] == "FileNotFound"


def test_report_row_out_of_range_errors(workdir, capsys):
    tmp, cfg = workdir
    assert run(cfg, "train") == 0
    code = run(cfg, "report", "--row", "100000")
    assert code == 1
    doc = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert doc["error"] == "DrugSensError"
