"""Exact per-prediction Shapley attributions for the boosted ensemble.

Two independent routes compute the same quantity:

* ``brute_force_shap`` enumerates every feature subset S and evaluates the
  path-dependent set function v(S) by tree descent (features outside S are
  integrated out using per-node cover fractions). It is exponential in the
  feature count and exists to validate the fast path.
* ``tree_shap`` runs the polynomial-time algorithm that pushes a compact
  summary of all subset paths down each tree, extending the summary at
  every split and unwinding it when a feature repeats or a leaf is scored.

Both use the same v(S), so agreement is a well-posed test. Attributions are
additive: base_value + sum(contributions) equals the model prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyInput, MisalignedFeatures, TooManyFeatures
from .gbdt import GbdtModel, RegressionTree

BRUTE_FORCE_FEATURE_LIMIT = 20


@dataclass
class ShapExplanation:
    """Additive attribution of one prediction across input features."""

    base_value: float
    contributions: np.ndarray
    prediction: float
    feature_names: list[str]
    row_id: Optional[tuple[str, str]] = None

    def additivity_gap(self) -> float:
        return abs(self.base_value + float(np.sum(self.contributions)) - self.prediction)


@dataclass
class GlobalImportance:
    """Features ranked by mean absolute attribution, non-increasing."""

    ranking: list[tuple[str, float]]

    def to_csv(self) -> str:
        lines = ["feature,mean_abs_shap"]
        lines += [f"{name},{value!r}" for name, value in self.ranking]
        return "\n".join(lines) + "\n"


def _tree_expected(tree: RegressionTree) -> float:
    leaves = tree.feature < 0
    return float(np.sum(tree.weight[leaves] * tree.cover[leaves]) / tree.cover[0])


def expected_value(model: GbdtModel) -> float:
    """Cover-weighted mean model output, i.e. the value of the empty feature
    coalition and the anchor of every waterfall."""
    acc = model.base_score
    lr = model.params.learning_rate
    for tree in model.trees:
        acc += lr * _tree_expected(tree)
    return float(acc)


def _hot_child(tree: RegressionTree, node: int, x: np.ndarray) -> tuple[int, int]:
    """(hot, cold) children: hot is the branch x takes."""
    v = x[tree.feature[node]]
    if np.isnan(v):
        go_left = bool(tree.default_left[node])
    else:
        go_left = bool(v < tree.threshold[node])
    left, right = int(tree.left[node]), int(tree.right[node])
    return (left, right) if go_left else (right, left)


def _tree_coalition_value(tree: RegressionTree, x: np.ndarray, mask: int) -> float:
    """v(S) for one tree: follow x on features in the coalition, average over
    cover fractions elsewhere."""

    def rec(node: int) -> float:
        f = int(tree.feature[node])
        if f < 0:
            return float(tree.weight[node])
        if mask >> f & 1:
            hot, _ = _hot_child(tree, node, x)
            return rec(hot)
        left, right = int(tree.left[node]), int(tree.right[node])
        c = tree.cover[node]
        return (tree.cover[left] * rec(left) + tree.cover[right] * rec(right)) / c

    return rec(0)


def brute_force_shap(
    model: GbdtModel, x: Sequence[float], row_id: Optional[tuple[str, str]] = None
) -> ShapExplanation:
    """Shapley values by full subset enumeration (oracle path).

    phi_i = sum over S not containing i of
            |S|! (M-|S|-1)! / M! * [v(S + {i}) - v(S)].
    """
    x = np.asarray(x, dtype=np.float64)
    M = model.n_features
    if x.shape != (M,):
        raise DimensionMismatch(f"expected {M} features, got {x.shape}")
    if M > BRUTE_FORCE_FEATURE_LIMIT:
        raise TooManyFeatures(
            f"{M} features exceeds the exhaustive limit of {BRUTE_FORCE_FEATURE_LIMIT}"
        )

    lr = model.params.learning_rate
    n_masks = 1 << M
    v = np.zeros(n_masks, dtype=np.float64)
    for tree in model.trees:
        used = 0
        for f in tree.feature:
            if f >= 0:
                used |= 1 << int(f)
        cache: dict[int, float] = {}
        for mask in range(n_masks):
            key = mask & used
            if key not in cache:
                cache[key] = _tree_coalition_value(tree, x, key)
            v[mask] += lr * cache[key]

    fact = [math.factorial(s) for s in range(M + 1)]
    weight = [fact[s] * fact[M - s - 1] / fact[M] for s in range(M)]

    phi = np.zeros(M, dtype=np.float64)
    for mask in range(n_masks):
        s = bin(mask).count("1")
        for i in range(M):
            bit = 1 << i
            if mask & bit:
                continue
            phi[i] += weight[s] * (v[mask | bit] - v[mask])

    return ShapExplanation(
        base_value=model.base_score + float(v[0]),
        contributions=phi,
        prediction=model.predict(x),
        feature_names=list(model.feature_names),
        row_id=row_id,
    )


# --- polynomial-time exact path algorithm ---

def _extend(d: list, z: list, o: list, w: list, pz: float, po: float, pi: int):
    l = len(w)
    d = d + [pi]
    z = z + [pz]
    o = o + [po]
    w = w + [1.0 if l == 0 else 0.0]
    for i in range(l - 1, -1, -1):
        w[i + 1] += po * w[i] * (i + 1) / (l + 1)
        w[i] = pz * w[i] * (l - i) / (l + 1)
    return d, z, o, w


def _unwind(d: list, z: list, o: list, w: list, idx: int):
    D = len(w) - 1
    one, zero = o[idx], z[idx]
    nw = w[:D]
    nxt = w[D]
    for j in range(D - 1, -1, -1):
        if one != 0.0:
            tmp = nw[j]
            nw[j] = nxt * (D + 1) / ((j + 1) * one)
            nxt = tmp - nw[j] * zero * (D - j) / (D + 1)
        else:
            nw[j] = nw[j] * (D + 1) / (zero * (D - j))
    nd, nz, no = d[:D], z[:D], o[:D]
    for j in range(idx, D):
        nd[j] = d[j + 1]
        nz[j] = z[j + 1]
        no[j] = o[j + 1]
    return nd, nz, no, nw


def _unwound_sum(z: list, o: list, w: list, idx: int) -> float:
    D = len(w) - 1
    one, zero = o[idx], z[idx]
    total = 0.0
    if one != 0.0:
        nxt = w[D]
        for j in range(D - 1, -1, -1):
            tmp = nxt / ((j + 1) * one)
            total += tmp
            nxt = w[j] - tmp * zero * (D - j)
    else:
        for j in range(D - 1, -1, -1):
            total += w[j] / (zero * (D - j))
    return total * (D + 1)


def _tree_shap_accumulate(tree: RegressionTree, x: np.ndarray, phi: np.ndarray, scale: float):
    def recurse(node, d, z, o, w, pz, po, pi):
        d, z, o, w = _extend(d, z, o, w, pz, po, pi)
        f = int(tree.feature[node])
        if f < 0:
            leaf = float(tree.weight[node])
            for i in range(1, len(w)):
                total = _unwound_sum(z, o, w, i)
                phi[d[i]] += total * (o[i] - z[i]) * leaf * scale
            return
        hot, cold = _hot_child(tree, node, x)
        iz, io = 1.0, 1.0
        for j in range(1, len(d)):
            if d[j] == f:
                iz, io = z[j], o[j]
                d, z, o, w = _unwind(d, z, o, w, j)
                break
        cov = tree.cover[node]
        recurse(hot, d, z, o, w, iz * tree.cover[hot] / cov, io, f)
        recurse(cold, d, z, o, w, iz * tree.cover[cold] / cov, 0.0, f)

    recurse(0, [], [], [], [], 1.0, 1.0, -1)


def tree_shap(
    model: GbdtModel, x: Sequence[float], row_id: Optional[tuple[str, str]] = None
) -> ShapExplanation:
    """Exact attributions in polynomial time; agrees with the brute-force
    oracle wherever the oracle is feasible."""
    x = np.asarray(x, dtype=np.float64)
    M = model.n_features
    if x.shape != (M,):
        raise DimensionMismatch(f"expected {M} features, got {x.shape}")

    phi = np.zeros(M, dtype=np.float64)
    lr = model.params.learning_rate
    for tree in model.trees:
        _tree_shap_accumulate(tree, x, phi, lr)

    return ShapExplanation(
        base_value=expected_value(model),
        contributions=phi,
        prediction=model.predict(x),
        feature_names=list(model.feature_names),
        row_id=row_id,
    )


def explain_rows(model: GbdtModel, X, row_ids=None) -> list[ShapExplanation]:
    """Batch attribution with deterministic row order."""
    Xa = np.asarray(X.values if hasattr(X, "values") else X, dtype=np.float64)
    ids = row_ids
    if ids is None and hasattr(X, "row_ids"):
        ids = X.row_ids
    out = []
    for i in range(Xa.shape[0]):
        rid = tuple(ids[i]) if ids is not None else None
        out.append(tree_shap(model, Xa[i], row_id=rid))
    return out


def global_importance(explanations: Sequence[ShapExplanation]) -> GlobalImportance:
    """Rank features by mean absolute attribution across explanations."""
    if not explanations:
        raise EmptyInput("no explanations given")
    names = explanations[0].feature_names
    for e in explanations[1:]:
        if e.feature_names != names:
            raise MisalignedFeatures("explanations use different feature spaces")
    stacked = np.stack([np.abs(e.contributions) for e in explanations])
    means = stacked.mean(axis=0)
    ranking = sorted(zip(names, means.tolist()), key=lambda kv: (-kv[1], kv[0]))
    return GlobalImportance(ranking=ranking)


def top_k_features(explanation: ShapExplanation, k: int = 5) -> list[tuple[str, float]]:
    """The k features with the largest |phi|, signed values preserved; ties
    break on the feature name. k beyond the feature count returns all."""
    if k < 1:
        raise ValueError("k must be >= 1")
    pairs = list(zip(explanation.feature_names, explanation.contributions.tolist()))
    pairs.sort(key=lambda kv: (-abs(kv[1]), kv[0]))
    return pairs[:k]


def waterfall_data(explanation: ShapExplanation) -> list[dict]:
    """Cumulative walk from the base value to the prediction, features in
    descending |phi| order; chart rendering is left to clients."""
    entries = sorted(
        zip(explanation.feature_names, explanation.contributions.tolist()),
        key=lambda kv: (-abs(kv[1]), kv[0]),
    )
    out = []
    running = explanation.base_value
    for name, phi in entries:
        running += phi
        out.append({"feature": name, "shap": phi, "cumulative": running})
    return out


def aggregate_one_hot(explanation: ShapExplanation) -> list[tuple[str, float]]:
    """Optional readability aid: sum attributions of each one-hot group back
    to its source column (grouping on the 'col=level' naming)."""
    groups: dict[str, float] = {}
    for name, phi in zip(explanation.feature_names, explanation.contributions.tolist()):
        col = name.split("=", 1)[0] if "=" in name else name
        groups[col] = groups.get(col, 0.0) + phi
    return sorted(groups.items(), key=lambda kv: (-abs(kv[1]), kv[0]))


def explanation_to_dict(explanation: ShapExplanation, x: Optional[Sequence[float]] = None) -> dict:
    """JSON-ready export: row id, prediction, base value, and per-feature
    (value, shap) pairs."""
    values = None if x is None else np.asarray(x, dtype=np.float64)
    contributions = []
    for i, (name, phi) in enumerate(
        zip(explanation.feature_names, explanation.contributions.tolist())
    ):
        entry = {"feature": name, "shap": phi}
        if values is not None:
            entry["value"] = float(values[i])
        contributions.append(entry)
    return {
        "row_id": list(explanation.row_id) if explanation.row_id else None,
        "prediction": explanation.prediction,
        "base_value": explanation.base_value,
        "contributions": contributions,
    }
