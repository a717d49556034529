"""Command-line entry points: ingest, train, tune, evaluate, curve, explain,
report, serve.

Each command reads one JSON config (plus environment and flag overrides),
re-derives the deterministic data pipeline, and writes artifacts that embed
the format version and the config hash that produced them. Errors print a
machine-readable JSON object on stderr and exit non-zero.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import dataset as ds
from .clinical import ClinicalReport, build_prompt, classify_response, request_summary
from .config import AppConfig, config_hash, load_config
from .errors import DrugSensError, LlmClientError
from .evaluation import (
    ParamSpace,
    boosting_curve,
    curve_to_csv,
    cv_report_to_csv,
    k_fold_cv,
    randomized_search,
    regression_metrics,
    trials_to_csv,
)
from .explain import (
    explanation_to_dict,
    global_importance,
    top_k_features,
    tree_shap,
)
from .gbdt import (
    HyperParams,
    fit_gbdt,
    fit_linear_regression,
    fit_random_forest,
)
from .persistence import (
    file_sha256,
    load_model,
    save_model,
    write_artifact,
    write_csv_artifact,
)


class _Pipeline:
    """Deterministic raw-CSV -> split pipeline shared by the commands."""

    def __init__(self, cfg: AppConfig):
        self.cfg = cfg
        self.hash = config_hash(cfg)
        raw = Path(cfg.data_path).read_bytes()
        records = ds.parse_gdsc(raw)
        filtered = ds.filter_subtypes(records, cfg.subtypes)
        self.records, partial = ds.clean(filtered, cfg.missing_threshold)
        self.schema = ds.fit_encoding(self.records, base=partial)
        self.matrix, self.y = ds.encode(self.records, self.schema)
        self.split = ds.train_test_split(
            self.matrix, self.y, cfg.test_fraction, cfg.split_seed
        )
        self.record_index = {
            (r.cosmic_id or "", r.drug_id or ""): r for r in self.records
        }

    def record_for_test_row(self, i: int) -> ds.GdscRecord:
        row_id = self.split.test[0].row_ids[i]
        return self.record_index[row_id]

    def params(self, overrides: Optional[dict] = None) -> HyperParams:
        merged = {"seed": self.cfg.seed, **self.cfg.fixed_params, **(overrides or {})}
        return HyperParams(**merged)


def _artifacts_dir(cfg: AppConfig) -> Path:
    out = Path(cfg.artifacts_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_params_file(path: Optional[str]) -> Optional[dict]:
    if not path:
        return None
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return doc.get("params", doc)


def cmd_ingest(cfg: AppConfig, args) -> int:
    pipe = _Pipeline(cfg)
    out = _artifacts_dir(cfg)
    (out / "schema.json").write_text(pipe.schema.to_json() + "\n", encoding="utf-8")

    import io

    for name, (fm, y) in (
        ("train.csv", pipe.split.train),
        ("test.csv", pipe.split.test),
    ):
        buf = io.StringIO()
        ds.matrix_to_csv(fm, y, buf)
        write_csv_artifact(out / name, buf.getvalue(), pipe.hash)
    write_artifact(
        out / "split.json",
        {
            "seed": pipe.split.seed,
            "train_row_ids": [list(r) for r in pipe.split.train[0].row_ids],
            "test_row_ids": [list(r) for r in pipe.split.test[0].row_ids],
        },
        pipe.hash,
    )
    print(f"ingest: {pipe.matrix.n_rows} rows, {len(pipe.matrix.feature_names)} features -> {out}")
    return 0


def cmd_train(cfg: AppConfig, args) -> int:
    pipe = _Pipeline(cfg)
    out = _artifacts_dir(cfg)
    params = pipe.params(_load_params_file(getattr(args, "params_file", None)))
    (X_train, y_train), (X_test, y_test) = pipe.split.train, pipe.split.test

    model = fit_gbdt(X_train, y_train, params)
    model_path = cfg.resolved_model_path()
    model_path.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, model_path, config_hash=pipe.hash)
    (out / "schema.json").write_text(pipe.schema.to_json() + "\n", encoding="utf-8")

    metrics = regression_metrics(y_test, model.predict_rows(X_test))
    payload = {"split_seed": pipe.split.seed, "test_metrics": metrics.to_dict(),
               "params": params.to_dict(), "n_train": X_train.n_rows, "n_test": X_test.n_rows}
    if getattr(args, "baselines", False):
        lin = fit_linear_regression(X_train, y_train, cfg.baseline_ridge_epsilon)
        rf = fit_random_forest(
            X_train, y_train, cfg.baseline_rf_trees, cfg.baseline_rf_max_depth, cfg.seed
        )
        payload["baseline_metrics"] = {
            "linear": regression_metrics(y_test, lin.predict_rows(X_test)).to_dict(),
            "random_forest": regression_metrics(y_test, rf.predict_rows(X_test)).to_dict(),
        }
    write_artifact(out / "metrics.json", payload, pipe.hash)
    print(f"train: model -> {model_path}, test r2={metrics.r2:.4f} mae={metrics.mae:.4f}")
    return 0


def cmd_tune(cfg: AppConfig, args) -> int:
    pipe = _Pipeline(cfg)
    out = _artifacts_dir(cfg)
    space = ParamSpace.from_dict(cfg.param_space)
    (X_train, y_train), _ = pipe.split.train, pipe.split.test
    fixed = {"seed": cfg.seed, **cfg.fixed_params}
    best, trials = randomized_search(
        X_train, y_train, space,
        n_iter=cfg.search_n_iter, k=cfg.search_k, seed=cfg.seed, fixed_params=fixed,
    )
    write_artifact(out / "best_params.json", {"params": best.to_dict()}, pipe.hash)
    write_artifact(out / "trials.json", {"trials": trials}, pipe.hash)
    write_csv_artifact(out / "trials.csv", trials_to_csv(trials), pipe.hash)
    best_trial = max(trials, key=lambda t: t["mean_r2"])
    print(f"tune: {len(trials)} trials, best mean r2={best_trial['mean_r2']:.4f} -> {out / 'best_params.json'}")
    return 0


def cmd_evaluate(cfg: AppConfig, args) -> int:
    pipe = _Pipeline(cfg)
    out = _artifacts_dir(cfg)
    k = getattr(args, "k", None) or cfg.cv_k
    params = pipe.params(_load_params_file(getattr(args, "params_file", None)))
    report = k_fold_cv(
        pipe.matrix, pipe.y, k,
        trainer=lambda X, y: fit_gbdt(X, y, params),
        seed=cfg.seed,
    )
    write_artifact(out / "cv_report.json", report.to_dict(), pipe.hash)
    write_csv_artifact(out / "cv_report.csv", cv_report_to_csv(report), pipe.hash)
    mean = report.mean_metrics
    print(f"evaluate: {k}-fold mean r2={mean.r2:.4f} mae={mean.mae:.4f} -> {out / 'cv_report.json'}")
    return 0


def cmd_curve(cfg: AppConfig, args) -> int:
    pipe = _Pipeline(cfg)
    out = _artifacts_dir(cfg)
    base = pipe.params(cfg.curve_params)
    (X_train, y_train), (X_test, y_test) = pipe.split.train, pipe.split.test
    curve = boosting_curve(X_train, y_train, X_test, y_test, cfg.curve_counts, base)
    write_csv_artifact(out / "curve.csv", curve_to_csv(curve), pipe.hash)
    ends = f"r2 {curve[0][1].r2:.3f}->{curve[-1][1].r2:.3f}, mae {curve[0][1].mae:.3f}->{curve[-1][1].mae:.3f}"
    print(f"curve: {cfg.curve_counts} ({ends}) -> {out / 'curve.csv'}")
    return 0


def cmd_explain(cfg: AppConfig, args) -> int:
    pipe = _Pipeline(cfg)
    out = _artifacts_dir(cfg)
    model = load_model(cfg.resolved_model_path())
    X_test, _ = pipe.split.test
    rows = range(X_test.n_rows)
    if getattr(args, "rows", None):
        rows = [int(r) for r in args.rows.split(",")]

    explanations = []
    docs = []
    for i in rows:
        x = X_test.values[i]
        e = tree_shap(model, x, row_id=tuple(X_test.row_ids[i]))
        explanations.append(e)
        docs.append(explanation_to_dict(e, x))
    write_artifact(out / "explanations.json", {"explanations": docs}, pipe.hash)
    importance = global_importance(explanations)
    write_csv_artifact(out / "global_importance.csv", importance.to_csv(), pipe.hash)
    top_name = importance.ranking[0][0] if importance.ranking else "n/a"
    print(f"explain: {len(docs)} rows, top feature {top_name} -> {out / 'explanations.json'}")
    return 0


def cmd_report(cfg: AppConfig, args) -> int:
    pipe = _Pipeline(cfg)
    out = _artifacts_dir(cfg)
    model_path = cfg.resolved_model_path()
    model = load_model(model_path)
    X_test, _ = pipe.split.test
    i = args.row
    if not (0 <= i < X_test.n_rows):
        raise DrugSensError(f"--row {i} out of range (test split has {X_test.n_rows} rows)")

    x = X_test.values[i]
    record = pipe.record_for_test_row(i)
    prediction = model.predict(x)
    explanation = tree_shap(model, x, row_id=tuple(X_test.row_ids[i]))
    report = ClinicalReport(
        drug_name=record.drug_name or "unspecified",
        predicted_ln_ic50=prediction,
        response=classify_response(prediction, cfg.response_threshold),
        top_features=top_k_features(explanation, cfg.top_k),
        provenance={
            "model_checksum": file_sha256(model_path),
            "created_at": datetime.now(timezone.utc).isoformat(),
        },
    )
    payload: dict = {}
    if getattr(args, "summarize", False):
        prompt = build_prompt(report)
        payload["prompt"] = prompt  # persisted verbatim for audit
        try:
            report.summary_text = request_summary(prompt, cfg.llm_config())
            payload["summary_status"] = "ok"
        except LlmClientError as exc:
            payload["summary_status"] = "unavailable"
            payload["summary_error"] = str(exc)
    payload["report"] = report.to_dict()
    out_path = out / f"report_row{i}.json"
    write_artifact(out_path, payload, pipe.hash)
    print(f"report: row {i} ({report.drug_name}) {report.response.label} -> {out_path}")
    return 0


def cmd_serve(cfg: AppConfig, args) -> int:
    import uvicorn

    from .server import create_app

    out = _artifacts_dir(cfg)
    model_path = cfg.resolved_model_path()
    model = load_model(model_path)
    schema = ds.EncodingSchema.from_json((out / "schema.json").read_text(encoding="utf-8"))
    metrics_path = out / "metrics.json"
    metrics_doc = (
        json.loads(metrics_path.read_text(encoding="utf-8")) if metrics_path.exists() else None
    )
    app = create_app(
        model,
        schema,
        metrics_doc=metrics_doc,
        threshold=cfg.response_threshold,
        top_k=cfg.top_k,
        llm_config=cfg.llm_config(),
        model_checksum=file_sha256(model_path),
        static_dir=cfg.static_dir or None,
    )
    uvicorn.run(app, host=cfg.server_host, port=cfg.server_port, log_level="info")
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "train": cmd_train,
    "tune": cmd_tune,
    "evaluate": cmd_evaluate,
    "curve": cmd_curve,
    "explain": cmd_explain,
    "report": cmd_report,
    "serve": cmd_serve,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drugsens",
        description="Drug-sensitivity prediction and explanation pipeline.",
    )
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--data", help="override data CSV path")
    parser.add_argument("--artifacts", help="override artifacts directory")
    parser.add_argument("--seed", type=int, help="override model/search seed")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", help="clean + encode the dataset and write the split")
    p_train = sub.add_parser("train", help="fit the model and write model + metrics")
    p_train.add_argument("--params-file", help="JSON file with hyperparameters (e.g. tune output)")
    p_train.add_argument("--baselines", action="store_true", help="also fit linear/forest baselines")
    sub.add_parser("tune", help="randomized hyperparameter search")
    p_eval = sub.add_parser("evaluate", help="k-fold cross-validation report")
    p_eval.add_argument("--k", type=int, help="fold count (default from config)")
    p_eval.add_argument("--params-file", help="JSON file with hyperparameters")
    sub.add_parser("curve", help="metrics vs number of boosting rounds")
    p_explain = sub.add_parser("explain", help="per-row attributions + global importance")
    p_explain.add_argument("--rows", help="comma-separated test row indices (default: all)")
    p_report = sub.add_parser("report", help="clinical report for one test row")
    p_report.add_argument("--row", type=int, required=True)
    p_report.add_argument("--summarize", action="store_true", help="fetch the LLM summary")
    sub.add_parser("serve", help="run the HTTP API")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(
            args.config,
            overrides={
                "data_path": args.data,
                "artifacts_dir": args.artifacts,
                "seed": args.seed,
            },
        )
        return _COMMANDS[args.command](cfg, args)
    except DrugSensError as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1
    except FileNotFoundError as exc:
        print(
            json.dumps({"error": "FileNotFound", "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
