import csv
import io

import numpy as np
import pytest

from drugsens import simulate
from drugsens.dataset import DEFAULT_SCHEMA_CONFIG, parse_gdsc
from drugsens.gbdt import GbdtModel, HyperParams, RegressionTree


def random_ensemble(rng, max_features=8, max_trees=5, max_depth=3):
    """Random valid ensemble: covers additive, structure arbitrary."""
    n_features = int(rng.integers(1, max_features + 1))
    n_trees = int(rng.integers(1, max_trees + 1))

    def grow(nodes, d, cover):
        idx = len(nodes)
        nodes.append(None)
        if d >= max_depth or cover < 2 or rng.random() < 0.25:
            nodes[idx] = {"kind": "leaf", "weight": float(rng.normal()), "cover": cover}
            return idx
        c_left = float(rng.integers(1, int(cover)))
        left = grow(nodes, d + 1, c_left)
        right = grow(nodes, d + 1, cover - c_left)
        nodes[idx] = {
            "kind": "split", "feature": int(rng.integers(n_features)),
            "threshold": float(rng.normal()), "left": left, "right": right,
            "cover": cover, "default_left": True,
        }
        return idx

    trees = []
    for _ in range(n_trees):
        nodes = []
        grow(nodes, 0, float(rng.integers(8, 64)))
        trees.append(RegressionTree.from_nodes(nodes))
    return GbdtModel(
        trees=trees,
        params=HyperParams(learning_rate=float(rng.uniform(0.05, 1.0))),
        feature_names=[f"f{i}" for i in range(n_features)],
        training_rows=100,
        base_score=float(rng.normal()),
    )

# Canonical column -> CSV header, in a fixed writing order.
FIXTURE_HEADER = [
    DEFAULT_SCHEMA_CONFIG[c]
    for c in [
        "COSMIC_ID", "CELL_LINE_NAME", "TCGA_DESC", "DRUG_ID", "DRUG_NAME",
        "LN_IC50", "AUC", "Z_SCORE", "MSI_STATUS", "SCREEN_MEDIUM",
        "GROWTH_PROPERTIES", "GENE_EXPRESSION", "METHYLATION", "CNA",
        "TARGET", "TARGET_PATHWAY",
    ]
]

_DEFAULT_ROW = {
    "COSMIC_ID": "683001",
    "CELL_LINE_NAME": "LUAD-0001",
    "TCGA_DESC": "LUAD",
    "DRUG_ID": "1001",
    "DRUG_NAME": "Erlotinib",
    "LN_IC50": "2.5",
    "AUC": "0.8",
    "Z_SCORE": "0.1",
    "MSI_STATUS": "MSS",
    "SCREEN_MEDIUM": "R",
    "GROWTH_PROPERTIES": "Adherent",
    "GENE_EXPRESSION": "Y",
    "METHYLATION": "N",
    "CNA": "Y",
    "TARGET": "EGFR",
    "TARGET_PATHWAY": "EGFR signaling",
}


def make_csv(rows):
    """Build CSV bytes with the production headers from sparse row dicts."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIXTURE_HEADER)
    for overrides in rows:
        row = {**_DEFAULT_ROW, **overrides}
        writer.writerow(
            [row[c] for c in [
                "COSMIC_ID", "CELL_LINE_NAME", "TCGA_DESC", "DRUG_ID", "DRUG_NAME",
                "LN_IC50", "AUC", "Z_SCORE", "MSI_STATUS", "SCREEN_MEDIUM",
                "GROWTH_PROPERTIES", "GENE_EXPRESSION", "METHYLATION", "CNA",
                "TARGET", "TARGET_PATHWAY",
            ]]
        )
    return buf.getvalue().encode()


def make_records(rows):
    return parse_gdsc(make_csv(rows))


@pytest.fixture(scope="session")
def full_csv_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "gdsc_synthetic.csv"
    path.write_text(simulate.dataset_csv(seed=7), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def mini_csv_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "gdsc_mini.csv"
    path.write_text(simulate.mini_dataset_csv(seed=11), encoding="utf-8")
    return path
