"""GDSC-style pharmacogenomic CSV ingestion, cleaning, and one-hot encoding.

The pipeline implemented here goes from a raw screen export (one row per
cell line x drug measurement) to a dense numeric design matrix:

    parse_gdsc -> filter_subtypes -> clean -> fit_encoding -> encode
               -> train_test_split

All steps are deterministic; every random choice is driven by an explicit
seed. Outputs are immutable value objects that are safe to share across
threads.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import BinaryIO, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import (
    AllRowsDropped,
    EmptyInput,
    MalformedRow,
    MissingColumn,
    SchemaMismatch,
    TooFewRows,
)

TARGET_COLUMN = "LN_IC50"

# Canonical column registry: (name, kind, record attribute). Text columns are
# one-hot capable; numeric columns pass through. LN_IC50 is the label and is
# never a feature.
_COLUMNS = [
    ("COSMIC_ID", "text", "cosmic_id"),
    ("CELL_LINE_NAME", "text", "cell_line_name"),
    ("TCGA_DESC", "text", "tcga_desc"),
    ("DRUG_ID", "text", "drug_id"),
    ("DRUG_NAME", "text", "drug_name"),
    ("TARGET", "text", "target"),
    ("TARGET_PATHWAY", "text", "target_pathway"),
    ("MSI_STATUS", "text", "msi_status"),
    ("SCREEN_MEDIUM", "text", "screen_medium"),
    ("GROWTH_PROPERTIES", "text", "growth_properties"),
    ("GENE_EXPRESSION", "text", "gene_expression"),
    ("METHYLATION", "text", "methylation"),
    ("CNA", "text", "cna"),
    ("LN_IC50", "numeric", "ln_ic50"),
    ("AUC", "numeric", "auc"),
    ("Z_SCORE", "numeric", "z_score"),
]

COLUMN_KIND = {name: kind for name, kind, _ in _COLUMNS}
_COLUMN_ATTR = {name: attr for name, _, attr in _COLUMNS}
COLUMN_ORDER = [name for name, _, _ in _COLUMNS]

# Default mapping canonical name -> CSV header, matching the public GDSC
# release (19 columns; the three tissue-descriptor headers are ignored).
DEFAULT_SCHEMA_CONFIG = {
    "COSMIC_ID": "COSMIC_ID",
    "CELL_LINE_NAME": "CELL_LINE_NAME",
    "TCGA_DESC": "TCGA_DESC",
    "DRUG_ID": "DRUG_ID",
    "DRUG_NAME": "DRUG_NAME",
    "TARGET": "TARGET",
    "TARGET_PATHWAY": "TARGET_PATHWAY",
    "MSI_STATUS": "Microsatellite instability Status (MSI)",
    "SCREEN_MEDIUM": "Screen Medium",
    "GROWTH_PROPERTIES": "Growth Properties",
    "GENE_EXPRESSION": "Gene Expression",
    "METHYLATION": "Methylation",
    "CNA": "CNA",
    "LN_IC50": "LN_IC50",
    "AUC": "AUC",
    "Z_SCORE": "Z_SCORE",
}

# Identifier and leakage columns removed from the feature set by default:
# unique identifiers carry no generalizable signal, AUC and Z_SCORE are
# alternative summaries of the same dose-response curve as the label, and
# TCGA_DESC is the cohort selector rather than a predictor.
DEFAULT_DROP_COLUMNS = [
    "COSMIC_ID",
    "CELL_LINE_NAME",
    "DRUG_ID",
    "TCGA_DESC",
    "AUC",
    "Z_SCORE",
]

DEFAULT_MISSING_THRESHOLD = 0.05


@dataclass(frozen=True)
class GdscRecord:
    """One raw row of the screen: a cell line x drug response measurement."""

    cosmic_id: Optional[str]
    cell_line_name: Optional[str]
    tcga_desc: Optional[str]
    drug_id: Optional[str]
    drug_name: Optional[str]
    target: Optional[str]
    target_pathway: Optional[str]
    msi_status: Optional[str]
    screen_medium: Optional[str]
    growth_properties: Optional[str]
    gene_expression: Optional[str]
    methylation: Optional[str]
    cna: Optional[str]
    ln_ic50: Optional[float]
    auc: Optional[float]
    z_score: Optional[float]

    def get(self, column: str):
        """Value of a canonical column, or None when absent."""
        try:
            return getattr(self, _COLUMN_ATTR[column])
        except KeyError:
            raise SchemaMismatch(f"unknown column {column!r}") from None


@dataclass
class EncodingSchema:
    """Fitted one-hot mapping plus the cleaning decisions that produced it."""

    categorical_levels: dict[str, list[str]] = field(default_factory=dict)
    numeric_columns: list[str] = field(default_factory=list)
    dropped_columns: list[tuple[str, str]] = field(default_factory=list)
    imputation_values: dict[str, object] = field(default_factory=dict)
    target_column: str = TARGET_COLUMN

    def validate(self) -> None:
        for col, levels in self.categorical_levels.items():
            if len(set(levels)) != len(levels):
                raise SchemaMismatch(f"duplicate levels for {col}")
            if sorted(levels) != list(levels):
                raise SchemaMismatch(f"levels for {col} not sorted")
        feature_cols = set(self.categorical_levels) | set(self.numeric_columns)
        if self.target_column in feature_cols:
            raise SchemaMismatch("target column listed as a feature")
        dropped = {c for c, _ in self.dropped_columns}
        if dropped & feature_cols:
            raise SchemaMismatch(
                f"columns both dropped and encoded: {sorted(dropped & feature_cols)}"
            )

    def feature_names(self) -> list[str]:
        names = []
        for col, levels in self.categorical_levels.items():
            names.extend(f"{col}={level}" for level in levels)
        names.extend(self.numeric_columns)
        return names

    def to_json(self) -> str:
        doc = {
            "categorical_levels": self.categorical_levels,
            "numeric_columns": self.numeric_columns,
            "dropped_columns": [
                {"column": c, "reason": r} for c, r in self.dropped_columns
            ],
            "imputation_values": self.imputation_values,
            "target_column": self.target_column,
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "EncodingSchema":
        doc = json.loads(text)
        schema = cls(
            categorical_levels={k: list(v) for k, v in doc["categorical_levels"].items()},
            numeric_columns=list(doc["numeric_columns"]),
            dropped_columns=[(d["column"], d["reason"]) for d in doc["dropped_columns"]],
            imputation_values=dict(doc["imputation_values"]),
            target_column=doc["target_column"],
        )
        schema.validate()
        return schema


@dataclass
class FeatureMatrix:
    """Dense row-major design matrix with column names and row provenance."""

    values: np.ndarray
    feature_names: list[str]
    row_ids: list[tuple[str, str]]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.feature_names):
            raise SchemaMismatch(
                f"matrix shape {self.values.shape} does not match "
                f"{len(self.feature_names)} feature names"
            )
        if len(self.row_ids) != self.values.shape[0]:
            raise SchemaMismatch("row_ids length does not match matrix rows")
        if not np.all(np.isfinite(self.values)):
            raise SchemaMismatch("matrix contains NaN or Inf entries")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]


@dataclass
class SplitPair:
    """Train/test partition of a feature matrix plus its targets."""

    train: tuple[FeatureMatrix, np.ndarray]
    test: tuple[FeatureMatrix, np.ndarray]
    seed: int


def _normalize_header(name: str) -> str:
    return name.strip().casefold()


def parse_gdsc(
    source: Union[bytes, BinaryIO, io.TextIOBase],
    schema_config: Optional[Mapping[str, str]] = None,
) -> list[GdscRecord]:
    """Parse an RFC-4180 CSV export into records.

    ``schema_config`` maps canonical column names to the CSV header names;
    header matching is case-insensitive after trimming. Extra CSV columns are
    ignored. Empty cells become ``None``; numeric cells are parsed as floats.

    Raises ``MissingColumn`` when a configured column is absent from the
    header and ``MalformedRow`` when a numeric cell fails to parse or a row
    has the wrong cell count.
    """
    config = dict(DEFAULT_SCHEMA_CONFIG)
    if schema_config:
        config.update(schema_config)

    if isinstance(source, bytes):
        text = source.decode("utf-8-sig")
    elif hasattr(source, "read"):
        raw = source.read()
        text = raw.decode("utf-8-sig") if isinstance(raw, bytes) else raw
    else:
        raise TypeError("source must be bytes or a readable stream")

    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise MissingColumn(config["LN_IC50"]) from None

    positions = {_normalize_header(h): i for i, h in enumerate(header)}
    col_index: dict[str, int] = {}
    for canonical in COLUMN_ORDER:
        if canonical not in config:
            raise MissingColumn(canonical)
        idx = positions.get(_normalize_header(config[canonical]))
        if idx is None:
            raise MissingColumn(canonical)
        col_index[canonical] = idx

    records = []
    n_cells = len(header)
    for row in reader:
        line_no = reader.line_num
        if len(row) != n_cells:
            raise MalformedRow(line_no, f"expected {n_cells} cells, got {len(row)}")
        values = {}
        for canonical, idx in col_index.items():
            cell = row[idx].strip()
            if cell == "":
                values[_COLUMN_ATTR[canonical]] = None
            elif COLUMN_KIND[canonical] == "numeric":
                try:
                    values[_COLUMN_ATTR[canonical]] = float(cell)
                except ValueError:
                    raise MalformedRow(
                        line_no, f"column {canonical}: {cell!r} is not numeric"
                    ) from None
            else:
                values[_COLUMN_ATTR[canonical]] = cell
        records.append(GdscRecord(**values))
    return records


def filter_subtypes(records: Sequence[GdscRecord], keep: Iterable[str]) -> list[GdscRecord]:
    """Keep only records whose cancer-subtype code is in ``keep``, in order."""
    keep = set(keep)
    if not keep:
        raise EmptyInput("keep set is empty")
    return [r for r in records if r.tcga_desc in keep]


def _is_missing(value) -> bool:
    if value is None:
        return True
    if isinstance(value, float):
        return not math.isfinite(value)
    return False


def clean(
    records: Sequence[GdscRecord],
    missing_threshold: float = DEFAULT_MISSING_THRESHOLD,
) -> tuple[list[GdscRecord], EncodingSchema]:
    """Row-drop and impute per the screen's preprocessing rules.

    Rows lacking a drug TARGET annotation are removed, as are rows whose
    label (LN_IC50) is missing or non-finite or whose subtype code is empty.
    Columns missing in more than ``missing_threshold`` of the surviving rows
    are recorded as dropped (and left untouched); remaining gaps are filled
    with the column mode (categorical, lexicographic tie-break) or mean
    (numeric). Returns the surviving records plus a partial schema carrying
    the drop and imputation decisions.
    """
    if not records:
        raise EmptyInput("no records to clean")
    if not (0.0 < missing_threshold < 1.0):
        raise ValueError("missing_threshold must be in (0, 1)")

    survivors = [
        r
        for r in records
        if r.target is not None
        and r.tcga_desc
        and r.ln_ic50 is not None
        and math.isfinite(r.ln_ic50)
    ]
    if not survivors:
        raise AllRowsDropped(f"none of {len(records)} records survived cleaning")

    n = len(survivors)
    dropped: list[tuple[str, str]] = []
    imputation: dict[str, object] = {}
    fill: dict[str, object] = {}

    for column in COLUMN_ORDER:
        if column == TARGET_COLUMN:
            continue
        observed = [r.get(column) for r in survivors]
        missing = sum(1 for v in observed if _is_missing(v))
        if missing == 0:
            continue
        frac = missing / n
        if frac > missing_threshold:
            dropped.append(
                (column, f"missing fraction {frac:.4f} > threshold {missing_threshold}")
            )
            continue
        present = [v for v in observed if not _is_missing(v)]
        if COLUMN_KIND[column] == "numeric":
            value: object = float(np.mean(np.sort(np.asarray(present, dtype=float))))
        else:
            counts: dict[str, int] = {}
            for v in present:
                counts[v] = counts.get(v, 0) + 1
            # mode, ties broken by lexicographically smallest level
            top = max(counts.values())
            value = min(k for k, c in counts.items() if c == top)
        imputation[column] = value
        fill[column] = value

    if fill:
        out = []
        for r in survivors:
            updates = {
                _COLUMN_ATTR[col]: val
                for col, val in fill.items()
                if _is_missing(r.get(col))
            }
            out.append(replace(r, **updates) if updates else r)
    else:
        out = list(survivors)

    partial = EncodingSchema(dropped_columns=dropped, imputation_values=imputation)
    return out, partial


def fit_encoding(
    records: Sequence[GdscRecord],
    drop_list: Optional[Sequence[str]] = None,
    base: Optional[EncodingSchema] = None,
) -> EncodingSchema:
    """Enumerate categorical levels and numeric columns from cleaned records.

    ``drop_list`` names columns excluded from the feature set (defaults to
    the identifier/leakage set). ``base`` merges in the partial schema that
    ``clean`` produced so its drops and imputation defaults are preserved.
    """
    if not records:
        raise EmptyInput("no records to fit encoding on")

    drops = list(DEFAULT_DROP_COLUMNS if drop_list is None else drop_list)
    dropped: list[tuple[str, str]] = []
    imputation: dict[str, object] = {}
    if base is not None:
        dropped.extend(base.dropped_columns)
        imputation.update(base.imputation_values)
    already = {c for c, _ in dropped}
    for col in drops:
        if col not in already:
            dropped.append((col, "configured drop: identifier or response-leakage column"))
            already.add(col)

    categorical: dict[str, list[str]] = {}
    numeric: list[str] = []
    for column in COLUMN_ORDER:
        if column == TARGET_COLUMN or column in already:
            continue
        if COLUMN_KIND[column] == "numeric":
            numeric.append(column)
        else:
            levels = sorted({r.get(column) for r in records if not _is_missing(r.get(column))})
            categorical[column] = levels

    schema = EncodingSchema(
        categorical_levels=categorical,
        numeric_columns=numeric,
        dropped_columns=dropped,
        imputation_values=imputation,
    )
    schema.validate()
    return schema


def encode(
    records: Sequence[GdscRecord], schema: EncodingSchema
) -> tuple[FeatureMatrix, np.ndarray]:
    """One-hot encode records under a fitted schema.

    Each categorical column expands to one 0/1 column per level named
    ``col=level``; a level unseen at fit time encodes as all-zeros for the
    group. Raises ``SchemaMismatch`` when a record lacks a schema column.
    """
    if not records:
        raise EmptyInput("no records to encode")
    names = schema.feature_names()
    n, p = len(records), len(names)
    X = np.zeros((n, p), dtype=np.float64)
    y = np.empty(n, dtype=np.float64)
    row_ids = []

    # column offsets within the matrix
    offsets: dict[str, int] = {}
    pos = 0
    level_index: dict[str, dict[str, int]] = {}
    for col, levels in schema.categorical_levels.items():
        offsets[col] = pos
        level_index[col] = {level: i for i, level in enumerate(levels)}
        pos += len(levels)
    numeric_pos = {col: pos + i for i, col in enumerate(schema.numeric_columns)}

    for i, rec in enumerate(records):
        for col, idx in level_index.items():
            value = rec.get(col)
            if _is_missing(value):
                raise SchemaMismatch(f"record {i} lacks value for column {col}")
            j = idx.get(value)
            if j is not None:
                X[i, offsets[col] + j] = 1.0
        for col, j in numeric_pos.items():
            value = rec.get(col)
            if _is_missing(value):
                raise SchemaMismatch(f"record {i} lacks value for column {col}")
            X[i, j] = float(value)
        if _is_missing(rec.ln_ic50):
            raise SchemaMismatch(f"record {i} lacks the target value")
        y[i] = rec.ln_ic50
        row_ids.append((rec.cosmic_id or "", rec.drug_id or ""))

    return FeatureMatrix(X, names, row_ids), y


def encode_mapping(schema: EncodingSchema, assignment: Mapping[str, object]) -> np.ndarray:
    """Encode a single raw column->value mapping into a feature row.

    Used by the serving layer so clients never handle one-hot columns.
    Unknown keys raise ``SchemaMismatch`` (reported by the server as an
    unknown-column error); missing schema columns raise ``SchemaMismatch``
    too, distinguished by message.
    """
    known = set(schema.categorical_levels) | set(schema.numeric_columns)
    for key in assignment:
        if key not in known:
            raise SchemaMismatch(f"unknown column {key!r}")

    names = schema.feature_names()
    row = np.zeros(len(names), dtype=np.float64)
    pos = 0
    for col, levels in schema.categorical_levels.items():
        if col not in assignment or assignment[col] is None:
            raise SchemaMismatch(f"missing value for column {col!r}")
        value = str(assignment[col])
        if value in levels:
            row[pos + levels.index(value)] = 1.0
        pos += len(levels)
    for col in schema.numeric_columns:
        if col not in assignment or assignment[col] is None:
            raise SchemaMismatch(f"missing value for column {col!r}")
        row[pos] = float(assignment[col])
        pos += 1
    return row


def decode_feature_names(names: Sequence[str]) -> tuple[dict[str, list[str]], list[str]]:
    """Invert ``EncodingSchema.feature_names`` into (levels-by-column, numerics)."""
    categorical: dict[str, list[str]] = {}
    numeric: list[str] = []
    for name in names:
        if "=" in name:
            col, level = name.split("=", 1)
            categorical.setdefault(col, []).append(level)
        else:
            numeric.append(name)
    return categorical, numeric


def train_test_split(
    X: FeatureMatrix, y: np.ndarray, test_fraction: float, seed: int
) -> SplitPair:
    """Seeded uniform split; the first ceil(n * test_fraction) permuted rows
    form the test set."""
    n = X.n_rows
    if n < 2:
        raise TooFewRows(f"need at least 2 rows, got {n}")
    if not (0.0 < test_fraction < 1.0):
        raise ValueError("test_fraction must be in (0, 1)")
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] != n:
        raise SchemaMismatch("target length does not match matrix rows")

    n_test = math.ceil(n * test_fraction)
    perm = np.random.default_rng(seed).permutation(n)
    test_idx, train_idx = perm[:n_test], perm[n_test:]

    def take(idx: np.ndarray) -> tuple[FeatureMatrix, np.ndarray]:
        fm = FeatureMatrix(
            X.values[idx], list(X.feature_names), [X.row_ids[i] for i in idx]
        )
        return fm, y[idx]

    return SplitPair(train=take(train_idx), test=take(test_idx), seed=seed)


def matrix_to_csv(fm: FeatureMatrix, y: np.ndarray, stream: io.TextIOBase) -> None:
    """Write the encoded matrix with header = feature names plus the label."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(list(fm.feature_names) + [TARGET_COLUMN])
    for i in range(fm.n_rows):
        writer.writerow([repr(v) for v in fm.values[i]] + [repr(float(y[i]))])
