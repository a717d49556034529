"""Response classification, prompt construction, and the chat-completion
client that fetches clinician-facing summaries.

The client speaks the OpenAI-compatible chat-completion JSON shape, so any
conforming endpoint works; tests run against a local mock. The API secret
is read from the environment variable named in the config and never appears
in logs or serialized artifacts.
"""

from __future__ import annotations

import logging
import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import requests

from .errors import (
    AuthError,
    IncompleteReport,
    InvalidParams,
    MalformedResponse,
    NonFiniteInput,
    RateLimited,
    ServerError,
)

log = logging.getLogger("drugsens.clinical")

DEFAULT_THRESHOLD = 4.0

SENSITIVE = "Sensitive"
RESISTANT = "Resistant"


@dataclass(frozen=True)
class ResponseClass:
    """Sensitivity/resistance call for a predicted LN-IC50."""

    label: str
    threshold: float
    ln_ic50: float


def classify_response(ln_ic50: float, threshold: float = DEFAULT_THRESHOLD) -> ResponseClass:
    """Resistant strictly above the threshold, sensitive otherwise."""
    if not (isinstance(ln_ic50, (int, float)) and math.isfinite(ln_ic50)):
        raise NonFiniteInput(f"ln_ic50 must be finite, got {ln_ic50!r}")
    if not math.isfinite(threshold):
        raise NonFiniteInput(f"threshold must be finite, got {threshold!r}")
    label = RESISTANT if ln_ic50 > threshold else SENSITIVE
    return ResponseClass(label=label, threshold=threshold, ln_ic50=float(ln_ic50))


@dataclass
class ClinicalReport:
    """Everything a clinician-facing summary is built from."""

    drug_name: str
    predicted_ln_ic50: float
    response: ResponseClass
    top_features: list[tuple[str, float]]
    summary_text: Optional[str] = None
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {
            "drug_name": self.drug_name,
            "predicted_ln_ic50": self.predicted_ln_ic50,
            "response": {
                "label": self.response.label,
                "threshold": self.response.threshold,
                "ln_ic50": self.response.ln_ic50,
            },
            "top_features": [
                {"feature": name, "shap": value} for name, value in self.top_features
            ],
            "provenance": dict(self.provenance),
        }
        if self.summary_text is not None:
            doc["summary_text"] = self.summary_text
        return doc


def _direction(phi: float) -> str:
    # positive attributions raise LN-IC50, and a lower LN-IC50 means a more
    # sensitive line, so positive pushes toward resistance
    if phi > 0:
        return "pushes toward resistance"
    if phi < 0:
        return "pushes toward sensitivity"
    return "neutral"


def build_prompt(report: ClinicalReport) -> str:
    """Deterministic prompt: identical reports yield byte-identical text."""
    if not report.drug_name:
        raise IncompleteReport("drug_name is required")
    if report.predicted_ln_ic50 is None or not math.isfinite(report.predicted_ln_ic50):
        raise IncompleteReport("predicted_ln_ic50 is required and must be finite")
    if report.response is None:
        raise IncompleteReport("response classification is required")
    if not report.top_features:
        raise IncompleteReport("top_features must be non-empty")

    lines = [
        "Drug sensitivity assessment for a non-small cell lung cancer cell profile.",
        "",
        f"Drug: {report.drug_name}",
        f"Predicted LN-IC50: {report.predicted_ln_ic50:.4f}",
        (
            f"Response classification: {report.response.label} "
            f"(resistant when LN-IC50 > {report.response.threshold:g})"
        ),
        "",
        "Top contributing model features:",
    ]
    for name, phi in report.top_features:
        lines.append(f"- {name} ({_direction(phi)}, |contribution| {abs(phi):.4f})")
    lines += [
        "",
        "Please write a concise clinician-facing summary covering:",
        "1. Mechanism of action of the drug.",
        "2. Drug metabolism considerations relevant to this profile.",
        "3. Potential treatment adjustments.",
        "4. Actionable next steps for the care team.",
    ]
    return "\n".join(lines) + "\n"


@dataclass
class LlmClientConfig:
    """Connection settings for the chat-completion service.

    ``api_key_env`` names the environment variable holding the secret; the
    secret itself is never stored or logged.
    """

    endpoint: str
    model: str
    api_key_env: str = "DRUGSENS_LLM_API_KEY"
    timeout: float = 30.0
    max_retries: int = 2
    backoff_base: float = 0.5

    def __post_init__(self):
        if self.max_retries < 0:
            raise InvalidParams("max_retries must be >= 0")
        if self.timeout <= 0:
            raise InvalidParams("timeout must be > 0")

    def to_dict(self) -> dict:
        return {
            "endpoint": self.endpoint,
            "model": self.model,
            "api_key_env": self.api_key_env,
            "timeout": self.timeout,
            "max_retries": self.max_retries,
            "backoff_base": self.backoff_base,
        }


_RETRYABLE = {429} | set(range(500, 600))


def request_summary(
    prompt: str,
    config: LlmClientConfig,
    sleeper: Callable[[float], None] = time.sleep,
) -> str:
    """POST the prompt as a chat-completion request and return the first
    choice's message content.

    Retryable failures (HTTP 429/5xx, timeouts, connection errors) are
    retried up to ``max_retries`` times with exponential backoff
    (backoff_base * 2**attempt). 401/403 fail immediately. Every attempt is
    logged; the API key never is.
    """
    api_key = os.environ.get(config.api_key_env)
    if not api_key:
        raise AuthError(
            f"API key environment variable {config.api_key_env!r} is not set"
        )
    body = {
        "model": config.model,
        "messages": [{"role": "user", "content": prompt}],
    }
    headers = {"Authorization": f"Bearer {api_key}"}

    total = config.max_retries + 1
    last_error: Optional[str] = None
    retryable_cls = ServerError
    for attempt in range(total):
        try:
            resp = requests.post(
                config.endpoint, json=body, headers=headers, timeout=config.timeout
            )
        except (requests.Timeout, requests.ConnectionError) as exc:
            last_error = f"transport failure: {type(exc).__name__}"
            log.warning("chat-completion attempt %d/%d failed: %s", attempt + 1, total, last_error)
            retryable_cls = ServerError
        else:
            status = resp.status_code
            log.info("chat-completion attempt %d/%d -> HTTP %d", attempt + 1, total, status)
            if status == 200:
                try:
                    content = resp.json()["choices"][0]["message"]["content"]
                except (ValueError, KeyError, IndexError, TypeError) as exc:
                    raise MalformedResponse(
                        "response lacks choices[0].message.content"
                    ) from exc
                if not isinstance(content, str):
                    raise MalformedResponse("message content is not text")
                return content
            if status in (401, 403):
                raise AuthError(f"authentication rejected (HTTP {status})")
            if status not in _RETRYABLE:
                raise ServerError(f"unexpected HTTP {status} from chat endpoint")
            last_error = f"HTTP {status}"
            retryable_cls = RateLimited if status == 429 else ServerError

        if attempt < total - 1:
            delay = config.backoff_base * (2 ** attempt)
            log.info("retrying chat-completion in %.2fs", delay)
            sleeper(delay)

    raise retryable_cls(
        f"chat-completion failed after {total} attempt(s): {last_error}"
    )
