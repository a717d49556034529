"""Model and artifact files: versioned JSON with embedded checksums.

Model files follow a stable field order (format_version, config_hash,
params, feature_names, base_score, training_rows, trees, checksum) and are
byte-reproducible for a fixed seed: nothing time- or path-dependent is
written.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Optional, Union

from .errors import CorruptFile, UnsupportedVersion
from .gbdt import GbdtModel

MODEL_FORMAT_VERSION = 1
ARTIFACT_FORMAT_VERSION = 1


def _canonical(doc: dict) -> bytes:
    return json.dumps(doc, separators=(",", ":"), allow_nan=False).encode("utf-8")


def model_document(model: GbdtModel, config_hash: str = "") -> dict:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "config_hash": config_hash,
        **model.to_dict(),
    }
    doc["checksum"] = hashlib.sha256(_canonical(doc)).hexdigest()
    return doc


def save_model(model: GbdtModel, path: Union[str, Path], config_hash: str = "") -> dict:
    doc = model_document(model, config_hash=config_hash)
    Path(path).write_bytes(_canonical(doc))
    return doc


def load_model(path: Union[str, Path]) -> GbdtModel:
    raw = Path(path).read_bytes()
    try:
        doc = json.loads(raw)
    except ValueError as exc:
        raise CorruptFile(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise CorruptFile(f"{path}: missing format_version")
    if doc["format_version"] != MODEL_FORMAT_VERSION:
        raise UnsupportedVersion(
            f"{path}: format_version {doc['format_version']} "
            f"(supported: {MODEL_FORMAT_VERSION})"
        )
    stored = doc.pop("checksum", None)
    if stored is None:
        raise CorruptFile(f"{path}: missing checksum")
    actual = hashlib.sha256(_canonical(doc)).hexdigest()
    if stored != actual:
        raise CorruptFile(f"{path}: checksum mismatch")
    return GbdtModel.from_dict(doc)


def file_sha256(path: Union[str, Path]) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_artifact(path: Union[str, Path], payload: dict, config_hash: str = "") -> None:
    """Write a JSON artifact with the standard provenance envelope."""
    doc = {
        "format_version": ARTIFACT_FORMAT_VERSION,
        "config_hash": config_hash,
        **payload,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def write_csv_artifact(path: Union[str, Path], csv_text: str, config_hash: str = "") -> None:
    """CSV artifacts carry the provenance envelope as a leading comment line."""
    header = f"# format_version={ARTIFACT_FORMAT_VERSION} config_hash={config_hash}\n"
    Path(path).write_text(header + csv_text, encoding="utf-8")
