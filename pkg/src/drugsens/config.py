"""Application configuration: JSON file plus environment-variable overrides.

Every run is parameterized by one ``AppConfig``; its hash is embedded in the
artifacts it produces. All randomness flows from the seeds recorded here.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Union

from .clinical import DEFAULT_THRESHOLD, LlmClientConfig

# Conventional search distributions; recorded in config rather than code so
# reproduction runs can widen or narrow them.
DEFAULT_PARAM_SPACE = {
    "n_estimators": {"choice": [50, 100, 150, 200, 250, 300, 350, 400, 450, 500]},
    "learning_rate": {"low": 0.01, "high": 0.3, "log": True},
    "max_depth": {"low": 3, "high": 10, "type": "int"},
    "subsample": {"low": 0.6, "high": 1.0},
    "colsample_bytree": {"low": 0.6, "high": 1.0},
}


@dataclass
class AppConfig:
    data_path: str = "gdsc.csv"
    subtypes: list[str] = field(default_factory=lambda: ["LUAD", "LUSC"])
    missing_threshold: float = 0.05
    test_fraction: float = 0.2
    split_seed: int = 42
    seed: int = 42
    param_space: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_PARAM_SPACE)))
    search_n_iter: int = 25
    search_k: int = 5
    cv_k: int = 5
    fixed_params: dict = field(default_factory=dict)
    curve_counts: list[int] = field(default_factory=lambda: [50, 100, 150, 200, 250])
    curve_params: dict = field(default_factory=dict)
    baseline_ridge_epsilon: float = 1e-6
    baseline_rf_trees: int = 60
    baseline_rf_max_depth: int = 12
    response_threshold: float = DEFAULT_THRESHOLD
    top_k: int = 5
    llm: dict = field(default_factory=lambda: {
        "endpoint": "https://api.deepseek.com/chat/completions",
        "model": "deepseek-chat",
        "api_key_env": "DRUGSENS_LLM_API_KEY",
        "timeout": 30.0,
        "max_retries": 2,
        "backoff_base": 0.5,
    })
    server_host: str = "127.0.0.1"
    server_port: int = 8000
    artifacts_dir: str = "artifacts"
    model_path: str = ""
    static_dir: str = ""

    def resolved_model_path(self) -> Path:
        if self.model_path:
            return Path(self.model_path)
        return Path(self.artifacts_dir) / "model.json"

    def llm_config(self) -> LlmClientConfig:
        return LlmClientConfig(**self.llm)

    def to_dict(self) -> dict:
        return asdict(self)


# Environment override -> (config field, parser). The LLM block uses dotted
# paths. Only scalars are overridable from the environment.
_ENV_OVERRIDES = {
    "DRUGSENS_DATA_PATH": ("data_path", str),
    "DRUGSENS_ARTIFACTS_DIR": ("artifacts_dir", str),
    "DRUGSENS_MODEL_PATH": ("model_path", str),
    "DRUGSENS_STATIC_DIR": ("static_dir", str),
    "DRUGSENS_SEED": ("seed", int),
    "DRUGSENS_SPLIT_SEED": ("split_seed", int),
    "DRUGSENS_TEST_FRACTION": ("test_fraction", float),
    "DRUGSENS_MISSING_THRESHOLD": ("missing_threshold", float),
    "DRUGSENS_SEARCH_N_ITER": ("search_n_iter", int),
    "DRUGSENS_SEARCH_K": ("search_k", int),
    "DRUGSENS_CV_K": ("cv_k", int),
    "DRUGSENS_RESPONSE_THRESHOLD": ("response_threshold", float),
    "DRUGSENS_SERVER_HOST": ("server_host", str),
    "DRUGSENS_SERVER_PORT": ("server_port", int),
    "DRUGSENS_LLM_ENDPOINT": ("llm.endpoint", str),
    "DRUGSENS_LLM_MODEL": ("llm.model", str),
    "DRUGSENS_LLM_API_KEY_ENV": ("llm.api_key_env", str),
    "DRUGSENS_LLM_TIMEOUT": ("llm.timeout", float),
    "DRUGSENS_LLM_MAX_RETRIES": ("llm.max_retries", int),
}


def load_config(
    path: Optional[Union[str, Path]] = None,
    env: Optional[Mapping[str, str]] = None,
    overrides: Optional[dict] = None,
) -> AppConfig:
    """Build the configuration from (in increasing precedence) defaults, the
    JSON file, environment variables, and explicit overrides."""
    cfg = AppConfig()
    if path is not None:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        for key, value in doc.items():
            if not hasattr(cfg, key):
                raise KeyError(f"unknown config key {key!r}")
            if key == "llm":
                cfg.llm.update(value)
            else:
                setattr(cfg, key, value)

    env = os.environ if env is None else env
    for var, (target, parse) in _ENV_OVERRIDES.items():
        if var in env and env[var] != "":
            value = parse(env[var])
            if target.startswith("llm."):
                cfg.llm[target.split(".", 1)[1]] = value
            else:
                setattr(cfg, target, value)

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "llm":
            cfg.llm.update(value)
        else:
            setattr(cfg, key, value)
    return cfg


def config_hash(cfg: AppConfig) -> str:
    canonical = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
