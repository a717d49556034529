"""HTTP API serving predictions, explanations, and clinical reports.

The server holds an immutable (model, schema) pair loaded at startup; every
value it returns is computed by the same library calls a direct caller
would use, with no server-side transformation. Raw feature maps are encoded
server-side so clients never deal with one-hot columns.
"""

from __future__ import annotations

import logging
from typing import Any, Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .clinical import ClinicalReport, LlmClientConfig, build_prompt, classify_response, request_summary
from .dataset import EncodingSchema, encode_mapping
from .errors import LlmClientError
from .explain import explanation_to_dict, top_k_features, tree_shap, waterfall_data
from .gbdt import GbdtModel

log = logging.getLogger("drugsens.server")


class PredictRequest(BaseModel):
    request_id: Optional[str] = None
    features: dict[str, Any] = Field(default_factory=dict)
    summarize: bool = False


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def _schema_payload(schema: EncodingSchema, threshold: float) -> dict:
    columns = []
    for col, levels in schema.categorical_levels.items():
        default = schema.imputation_values.get(col, levels[0] if levels else "")
        columns.append(
            {"name": col, "kind": "categorical", "levels": levels, "default": default}
        )
    for col in schema.numeric_columns:
        default = schema.imputation_values.get(col, 0.0)
        columns.append({"name": col, "kind": "numeric", "default": default})
    return {
        "columns": columns,
        "target_column": schema.target_column,
        "threshold": threshold,
    }


def create_app(
    model: GbdtModel,
    schema: EncodingSchema,
    metrics_doc: Optional[dict] = None,
    threshold: float = 4.0,
    top_k: int = 5,
    llm_config: Optional[LlmClientConfig] = None,
    model_checksum: str = "",
    static_dir: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="drugsens", docs_url=None, redoc_url=None)
    known_columns = set(schema.categorical_levels) | set(schema.numeric_columns)

    def encode_request(features: dict):
        """Returns (row, error response)."""
        unknown = sorted(set(features) - known_columns)
        if unknown:
            return None, _error(400, "unknown_column", f"unknown columns: {unknown}")
        missing = sorted(known_columns - set(features))
        if missing:
            return None, _error(422, "schema_violation", f"missing columns: {missing}")
        cleaned = dict(features)
        for col in schema.numeric_columns:
            try:
                cleaned[col] = float(features[col])
            except (TypeError, ValueError):
                return None, _error(
                    400, "unparseable_value",
                    f"column {col}: {features[col]!r} is not numeric",
                )
        for col in schema.categorical_levels:
            if cleaned[col] is None:
                return None, _error(422, "schema_violation", f"column {col} is null")
            cleaned[col] = str(cleaned[col])
        return encode_mapping(schema, cleaned), None

    def prediction_payload(req: PredictRequest, row):
        pred = model.predict(row)
        response = classify_response(pred, threshold)
        return {
            "request_id": req.request_id,
            "predicted_ln_ic50": pred,
            "response": {"label": response.label, "threshold": response.threshold},
        }

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/schema")
    def get_schema():
        return _schema_payload(schema, threshold)

    @app.get("/metrics")
    def get_metrics():
        if metrics_doc is None:
            return _error(404, "no_metrics", "no metrics artifact was loaded")
        return metrics_doc

    @app.post("/predict")
    def predict(req: PredictRequest):
        row, err = encode_request(req.features)
        if err is not None:
            return err
        return prediction_payload(req, row)

    @app.post("/explain")
    def explain(req: PredictRequest):
        row, err = encode_request(req.features)
        if err is not None:
            return err
        payload = prediction_payload(req, row)
        explanation = tree_shap(model, row)
        payload["explanation"] = explanation_to_dict(explanation, row)
        payload["waterfall"] = waterfall_data(explanation)
        return payload

    @app.post("/report")
    def report(req: PredictRequest):
        row, err = encode_request(req.features)
        if err is not None:
            return err
        payload = prediction_payload(req, row)
        explanation = tree_shap(model, row)
        top = top_k_features(explanation, top_k)
        clinical = ClinicalReport(
            drug_name=str(req.features.get("DRUG_NAME", "unspecified")),
            predicted_ln_ic50=payload["predicted_ln_ic50"],
            response=classify_response(payload["predicted_ln_ic50"], threshold),
            top_features=top,
            provenance={"model_checksum": model_checksum},
        )
        summary_status = "skipped"
        if req.summarize:
            if llm_config is None:
                summary_status = "unavailable"
                payload["summary_error"] = "no chat-completion endpoint configured"
            else:
                prompt = build_prompt(clinical)
                try:
                    clinical.summary_text = request_summary(prompt, llm_config)
                    summary_status = "ok"
                except LlmClientError as exc:
                    # prediction fields still returned on upstream failure
                    summary_status = "unavailable"
                    payload["summary_error"] = str(exc)
                    log.warning("summary generation failed: %s", exc)
        payload["report"] = clinical.to_dict()
        payload["summary_status"] = summary_status
        return payload

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
