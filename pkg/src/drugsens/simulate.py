"""Deterministic generator of GDSC-shaped screen data.

Produces a CSV with the same 19 columns as the public screen export so the
full pipeline (ingestion through reporting) can run offline. The response
surface is planted: each drug has a base potency, a handful of
genomics-by-pathway interactions shift it, per-cell-line frailty and
measurement noise sit on top. AUC and Z_SCORE are derived from LN_IC50 the
way the real columns are (Z_SCORE per drug), which is exactly why the
pipeline drops them as leakage.

Everything is a pure function of the seed and the size parameters.
"""

from __future__ import annotations

import argparse
import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

CSV_HEADER = [
    "COSMIC_ID",
    "CELL_LINE_NAME",
    "TCGA_DESC",
    "DRUG_ID",
    "DRUG_NAME",
    "LN_IC50",
    "AUC",
    "Z_SCORE",
    "GDSC Tissue descriptor 1",
    "GDSC Tissue descriptor 2",
    "Cancer Type (matching TCGA label)",
    "Microsatellite instability Status (MSI)",
    "Screen Medium",
    "Growth Properties",
    "CNA",
    "Gene Expression",
    "Methylation",
    "TARGET",
    "TARGET_PATHWAY",
]


@dataclass(frozen=True)
class DrugSpec:
    name: str
    target: str
    pathway: str


DRUGS: list[DrugSpec] = [
    DrugSpec("Erlotinib", "EGFR", "EGFR signaling"),
    DrugSpec("Gefitinib", "EGFR", "EGFR signaling"),
    DrugSpec("Afatinib", "EGFR, ERBB2", "EGFR signaling"),
    DrugSpec("Osimertinib", "EGFR", "EGFR signaling"),
    DrugSpec("Lapatinib", "ERBB2", "EGFR signaling"),
    DrugSpec("Trametinib", "MEK1, MEK2", "ERK MAPK signaling"),
    DrugSpec("Selumetinib", "MEK1, MEK2", "ERK MAPK signaling"),
    DrugSpec("Dabrafenib", "BRAF", "ERK MAPK signaling"),
    DrugSpec("Vemurafenib", "BRAF", "ERK MAPK signaling"),
    DrugSpec("Paclitaxel", "Microtubule stabiliser", "Mitosis"),
    DrugSpec("Docetaxel", "Microtubule stabiliser", "Mitosis"),
    DrugSpec("Gemcitabine", "Pyrimidine antimetabolite", "DNA replication"),
    DrugSpec("5-Fluorouracil", "Antimetabolite", "DNA replication"),
    DrugSpec("Cisplatin", "DNA crosslinker", "DNA replication"),
    DrugSpec("Carboplatin", "DNA crosslinker", "DNA replication"),
    DrugSpec("Etoposide", "TOP2", "DNA replication"),
    DrugSpec("Doxorubicin", "TOP2", "Genome integrity"),
    DrugSpec("Olaparib", "PARP1, PARP2", "Genome integrity"),
    DrugSpec("Talazoparib", "PARP1, PARP2", "Genome integrity"),
    DrugSpec("Crizotinib", "ALK, MET, ROS1", "RTK signaling"),
    DrugSpec("Alectinib", "ALK", "RTK signaling"),
    DrugSpec("Alpelisib", "PI3Kalpha", "PI3K/MTOR signaling"),
    DrugSpec("Everolimus", "MTORC1", "PI3K/MTOR signaling"),
    DrugSpec("Temsirolimus", "MTORC1", "PI3K/MTOR signaling"),
    DrugSpec("Vorinostat", "HDAC inhibitor Class I, IIa, IIb, IV", "Chromatin histone acetylation"),
    DrugSpec("Panobinostat", "HDAC inhibitor Class I, IIa, IIb, IV", "Chromatin histone acetylation"),
    DrugSpec("Venetoclax", "BCL2", "Apoptosis regulation"),
    DrugSpec("Navitoclax", "BCL2, BCL-XL, BCL-W", "Apoptosis regulation"),
    DrugSpec("Palbociclib", "CDK4, CDK6", "Cell cycle"),
    DrugSpec("Ribociclib", "CDK4, CDK6", "Cell cycle"),
    # two compounds shipped without target annotation: their rows exercise
    # the TARGET row-drop rule
    DrugSpec("Elesclomol", "", "Other"),
    DrugSpec("Phenformin", "", "Other"),
]

_TISSUE = {
    "LUAD": ("lung", "lung_NSCLC_adenocarcinoma"),
    "LUSC": ("lung", "lung_NSCLC_squamous_cell_carcinoma"),
    "SCLC": ("lung", "lung_small_cell_carcinoma"),
    "BRCA": ("breast", "breast"),
    "COAD": ("large_intestine", "large_intestine"),
}


@dataclass
class _CellLine:
    cosmic_id: int
    name: str
    subtype: str
    msi: Optional[str]
    medium: str
    growth: str
    cna: str
    gene_expression: str
    methylation: str
    frailty: float


def _make_cell_lines(rng: np.random.Generator, subtype_counts: dict[str, int]) -> list[_CellLine]:
    lines = []
    i = 0
    for subtype, count in subtype_counts.items():
        for _ in range(count):
            i += 1
            msi_draw = rng.random()
            if msi_draw < 0.03:
                msi = None  # missing; imputed downstream
            elif msi_draw < 0.15:
                msi = "MSI-H"
            else:
                msi = "MSS"
            lines.append(
                _CellLine(
                    cosmic_id=683000 + i,
                    name=f"{subtype}-{i:04d}",
                    subtype=subtype,
                    msi=msi,
                    medium="D" if rng.random() < 0.3 else "R",
                    growth=("Suspension" if (g := rng.random()) < 0.2
                            else "Semi-Adherent" if g < 0.3 else "Adherent"),
                    cna="Y" if rng.random() < 0.4 else "N",
                    gene_expression="Y" if rng.random() < 0.45 else "N",
                    methylation="Y" if rng.random() < 0.5 else "N",
                    frailty=float(rng.normal(0.0, 0.3)),
                )
            )
    return lines


def _interaction_shift(cell: _CellLine, drug: DrugSpec) -> float:
    shift = 0.0
    if cell.gene_expression == "Y" and drug.pathway in ("EGFR signaling", "PI3K/MTOR signaling"):
        shift -= 2.0
    if cell.gene_expression == "N" and drug.pathway == "ERK MAPK signaling":
        shift += 1.5
    if cell.msi == "MSI-H" and drug.pathway == "DNA replication":
        shift -= 2.5
    if cell.msi == "MSI-H" and drug.pathway == "Genome integrity":
        shift -= 3.0
    if cell.methylation == "Y" and drug.pathway == "Chromatin histone acetylation":
        shift -= 1.8
    if cell.cna == "Y" and "ERBB2" in drug.target:
        shift -= 2.2
    if cell.growth == "Suspension" and drug.pathway == "Apoptosis regulation":
        shift += 1.8
    if cell.medium == "D" and drug.pathway == "Mitosis":
        shift += 1.4
    return shift


def generate_rows(
    seed: int = 7,
    subtype_counts: Optional[dict[str, int]] = None,
    drugs: Optional[Sequence[DrugSpec]] = None,
) -> list[list[str]]:
    """All screen rows (cell line x drug), as CSV string cells."""
    rng = np.random.default_rng(seed)
    counts = subtype_counts or {"LUAD": 55, "LUSC": 45, "BRCA": 20, "COAD": 15, "SCLC": 10}
    drug_list = list(drugs if drugs is not None else DRUGS)
    cells = _make_cell_lines(rng, counts)
    drug_base = rng.normal(3.4, 2.45, size=len(drug_list))

    ln_ic50 = np.empty((len(cells), len(drug_list)))
    for ci, cell in enumerate(cells):
        for di, drug in enumerate(drug_list):
            ln_ic50[ci, di] = (
                drug_base[di]
                + _interaction_shift(cell, drug)
                + cell.frailty
                + rng.normal(0.0, 0.1)
            )

    # Z_SCORE standardizes within drug; AUC is a monotone squash of LN_IC50.
    drug_mean = ln_ic50.mean(axis=0)
    drug_sd = ln_ic50.std(axis=0)
    z_score = (ln_ic50 - drug_mean) / np.where(drug_sd > 0, drug_sd, 1.0)
    auc = 1.0 / (1.0 + np.exp(-(ln_ic50 - 2.0) / 2.5))

    rows = []
    for ci, cell in enumerate(cells):
        tissue1, tissue2 = _TISSUE[cell.subtype]
        for di, drug in enumerate(drug_list):
            rows.append(
                [
                    str(cell.cosmic_id),
                    cell.name,
                    cell.subtype,
                    str(1001 + di),
                    drug.name,
                    f"{ln_ic50[ci, di]:.6f}",
                    f"{auc[ci, di]:.6f}",
                    f"{z_score[ci, di]:.6f}",
                    tissue1,
                    tissue2,
                    cell.subtype,
                    cell.msi or "",
                    cell.medium,
                    cell.growth,
                    cell.cna,
                    cell.gene_expression,
                    cell.methylation,
                    drug.target,
                    drug.pathway,
                ]
            )
    return rows


def dataset_csv(
    seed: int = 7,
    subtype_counts: Optional[dict[str, int]] = None,
    drugs: Optional[Sequence[DrugSpec]] = None,
) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(generate_rows(seed=seed, subtype_counts=subtype_counts, drugs=drugs))
    return buf.getvalue()


def mini_dataset_csv(seed: int = 11) -> str:
    """Small fixture (12 drugs, 26 cell lines) for fast smoke tests."""
    return dataset_csv(
        seed=seed,
        subtype_counts={"LUAD": 10, "LUSC": 8, "BRCA": 5, "COAD": 3},
        drugs=DRUGS[:10] + DRUGS[-2:],
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        description="Generate a GDSC-shaped synthetic screen CSV."
    )
    parser.add_argument("--out", required=True, help="output CSV path")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--mini", action="store_true", help="small smoke-test dataset")
    args = parser.parse_args(argv)
    text = mini_dataset_csv(seed=args.seed) if args.mini else dataset_csv(seed=args.seed)
    Path(args.out).write_text(text, encoding="utf-8")
    print(f"wrote {args.out} ({text.count(chr(10)) - 1} rows)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
