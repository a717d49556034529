"""Second-order gradient-boosted regression trees plus reference baselines.

The booster minimizes squared error: each round fits a regression tree to
the gradient/hessian statistics (g = prediction - target, h = 1) with the
usual regularized gain

    gain = 1/2 * [GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)] - gamma

and leaf weight -G/(H+lambda). Split candidates are midpoints between
consecutive distinct sorted feature values (exact greedy, no histograms).
Ties break toward the lowest feature index, then the lowest threshold, so
training is reproducible. Per-node statistics are summed in a canonical
order (feature value, then gradient, then hessian) which makes fitted trees
independent of training row order when per-round sampling is disabled.

Every node stores its cover (number of masked training rows reaching it);
the explanation module relies on these counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidHyperParams,
    InvalidParams,
    SingularSystem,
)


@dataclass(frozen=True)
class HyperParams:
    """Booster configuration; range constraints are enforced on construction.

    ``base_score=None`` means "use the mean of the training targets", which
    is resolved when fitting. ``learning_rate=0`` is legal and freezes
    predictions at the base score (useful for degenerate-case testing).
    """

    n_estimators: int = 100
    learning_rate: float = 0.1
    max_depth: int = 4
    subsample: float = 1.0
    colsample_bytree: float = 1.0
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child_weight: float = 1.0
    base_score: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        checks = [
            (self.n_estimators >= 1, "n_estimators must be >= 1"),
            (0.0 <= self.learning_rate <= 1.0, "learning_rate must be in [0, 1]"),
            (self.max_depth >= 1, "max_depth must be >= 1"),
            (0.0 < self.subsample <= 1.0, "subsample must be in (0, 1]"),
            (0.0 < self.colsample_bytree <= 1.0, "colsample_bytree must be in (0, 1]"),
            (self.reg_lambda >= 0.0, "reg_lambda must be >= 0"),
            (self.gamma >= 0.0, "gamma must be >= 0"),
            (self.min_child_weight >= 0.0, "min_child_weight must be >= 0"),
        ]
        for ok, message in checks:
            if not ok:
                raise InvalidHyperParams(message)

    def to_dict(self) -> dict:
        return {
            "n_estimators": self.n_estimators,
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "subsample": self.subsample,
            "colsample_bytree": self.colsample_bytree,
            "reg_lambda": self.reg_lambda,
            "gamma": self.gamma,
            "min_child_weight": self.min_child_weight,
            "base_score": self.base_score,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "HyperParams":
        return cls(**doc)


class RegressionTree:
    """Binary regression tree stored as parallel arrays.

    Leaves have ``feature == -1``; internal nodes reference children by
    index. ``cover`` is the training row count through each node.
    """

    __slots__ = ("feature", "threshold", "left", "right", "cover", "weight", "default_left")

    def __init__(self, feature, threshold, left, right, cover, weight, default_left):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.cover = np.asarray(cover, dtype=np.float64)
        self.weight = np.asarray(weight, dtype=np.float64)
        self.default_left = np.asarray(default_left, dtype=bool)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_leaf(self, i: int) -> bool:
        return self.feature[i] < 0

    def max_depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int32)
        out = 0
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
            else:
                out = max(out, int(depth[i]))
        return out

    def predict_row(self, x: np.ndarray) -> float:
        i = 0
        while self.feature[i] >= 0:
            v = x[self.feature[i]]
            if np.isnan(v):
                go_left = self.default_left[i]
            else:
                go_left = v < self.threshold[i]
            i = self.left[i] if go_left else self.right[i]
        return float(self.weight[i])

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        idx = np.zeros(X.shape[0], dtype=np.int32)
        while True:
            feat = self.feature[idx]
            pending = np.nonzero(feat >= 0)[0]
            if pending.size == 0:
                break
            node = idx[pending]
            v = X[pending, feat[pending]]
            go_left = v < self.threshold[node]
            nan_mask = np.isnan(v)
            if nan_mask.any():
                go_left = np.where(nan_mask, self.default_left[node], go_left)
            idx[pending] = np.where(go_left, self.left[node], self.right[node])
        return self.weight[idx].copy()

    def validate(self) -> None:
        """Check the structural invariants: a single rooted binary tree with
        positive, additive covers and every node reachable."""
        n = self.n_nodes
        seen = np.zeros(n, dtype=bool)
        stack = [0]
        while stack:
            i = stack.pop()
            if seen[i]:
                raise InvalidParams(f"node {i} reachable twice")
            seen[i] = True
            if self.cover[i] <= 0:
                raise InvalidParams(f"node {i} has non-positive cover")
            if self.feature[i] >= 0:
                l, r = int(self.left[i]), int(self.right[i])
                if not (0 <= l < n and 0 <= r < n):
                    raise InvalidParams(f"node {i} has out-of-range children")
                if self.cover[i] != self.cover[l] + self.cover[r]:
                    raise InvalidParams(f"cover not additive at node {i}")
                stack.extend((l, r))
        if not seen.all():
            raise InvalidParams("unreachable nodes present")

    def to_nodes(self) -> list[dict]:
        nodes = []
        for i in range(self.n_nodes):
            if self.feature[i] < 0:
                nodes.append(
                    {"kind": "leaf", "weight": float(self.weight[i]), "cover": float(self.cover[i])}
                )
            else:
                nodes.append(
                    {
                        "kind": "split",
                        "feature": int(self.feature[i]),
                        "threshold": float(self.threshold[i]),
                        "left": int(self.left[i]),
                        "right": int(self.right[i]),
                        "cover": float(self.cover[i]),
                        "default_left": bool(self.default_left[i]),
                    }
                )
        return nodes

    @classmethod
    def from_nodes(cls, nodes: Sequence[dict]) -> "RegressionTree":
        n = len(nodes)
        feature = np.full(n, -1, dtype=np.int32)
        threshold = np.zeros(n, dtype=np.float64)
        left = np.full(n, -1, dtype=np.int32)
        right = np.full(n, -1, dtype=np.int32)
        cover = np.zeros(n, dtype=np.float64)
        weight = np.zeros(n, dtype=np.float64)
        default_left = np.ones(n, dtype=bool)
        for i, node in enumerate(nodes):
            cover[i] = node["cover"]
            if node["kind"] == "leaf":
                weight[i] = node["weight"]
            else:
                feature[i] = node["feature"]
                threshold[i] = node["threshold"]
                left[i] = node["left"]
                right[i] = node["right"]
                default_left[i] = node.get("default_left", True)
        tree = cls(feature, threshold, left, right, cover, weight, default_left)
        tree.validate()
        return tree


def _as_array(X) -> np.ndarray:
    if hasattr(X, "values") and hasattr(X, "feature_names"):
        return np.asarray(X.values, dtype=np.float64)
    return np.asarray(X, dtype=np.float64)


def _feature_names_of(X, p: int) -> list[str]:
    if hasattr(X, "feature_names"):
        return list(X.feature_names)
    return [f"f{i}" for i in range(p)]


def canonical_row_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Sort rows lexicographically by feature vector then target.

    Training in this order makes fitted trees independent of the caller's row
    order: rows that tie on every key are fully interchangeable.
    """
    keys = np.vstack([y[None, :], X.T[::-1]])
    return np.lexsort(keys)


class _TreeBuilder:
    """Greedy exact split search shared by the booster and the forest.

    Works on an (m x c) matrix of per-column row orderings so each node is a
    handful of vectorized passes rather than a per-column loop.
    """

    def __init__(self, X, g, h, reg_lambda, gamma, min_child_weight, max_depth,
                 col_sampler: Optional[Callable[[], np.ndarray]] = None):
        self.X = X
        self.g = g
        self.h = h
        self.lam = reg_lambda
        self.gamma = gamma
        self.mcw = min_child_weight
        self.max_depth = max_depth
        self.col_sampler = col_sampler
        self.nodes: list[list] = []  # [feature, threshold, left, right, cover, weight]

    def build(self, rows: np.ndarray, cols: np.ndarray) -> int:
        # stable per-column sort of the root rows; children inherit order by
        # filtering, so this is the only sort in the tree
        sub = self.X[np.ix_(rows, cols)]
        order_mat = rows[np.argsort(sub, axis=0, kind="stable")]
        self._cols = cols
        self._grow(order_mat, depth=0)
        return len(self.nodes)

    def _emit_leaf(self, rows: np.ndarray) -> int:
        G = float(np.sum(self.g[rows]))
        H = float(np.sum(self.h[rows]))
        weight = -G / (H + self.lam) if (H + self.lam) > 0 else 0.0
        self.nodes.append([-1, 0.0, -1, -1, float(len(rows)), weight])
        return len(self.nodes) - 1

    def _grow(self, order_mat: np.ndarray, depth: int) -> int:
        m = order_mat.shape[0]
        rows = order_mat[:, 0]
        if m < 2 or depth >= self.max_depth:
            return self._emit_leaf(np.sort(rows))

        if self.col_sampler is None:
            active = slice(None)
            active_cols = self._cols
        else:
            active = self.col_sampler()
            active_cols = self._cols[active]

        sub = order_mat[:, active]
        V = self.X[sub, active_cols[None, :]]
        Gm = np.cumsum(self.g[sub], axis=0)
        Hm = np.cumsum(self.h[sub], axis=0)
        G, H = float(Gm[-1, 0]), float(Hm[-1, 0])
        parent_score = G * G / (H + self.lam) if (H + self.lam) > 0 else 0.0

        GL, HL = Gm[:-1, :], Hm[:-1, :]
        GR, HR = G - GL, H - HL
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = 0.5 * (GL * GL / (HL + self.lam) + GR * GR / (HR + self.lam)
                          - parent_score) - self.gamma
        valid = (V[:-1, :] < V[1:, :]) & (HL >= self.mcw) & (HR >= self.mcw)
        gain = np.where(valid & np.isfinite(gain), gain, -np.inf)

        col_best = gain.max(axis=0)
        j = int(np.argmax(col_best))  # first max: lowest feature index wins ties
        if not col_best[j] > 0.0:
            return self._emit_leaf(np.sort(rows))
        k = int(np.argmax(gain[:, j]))  # first max: lowest threshold wins ties

        thr = 0.5 * (V[k, j] + V[k + 1, j])
        if not thr > V[k, j]:
            thr = float(V[k + 1, j])
        feature = int(active_cols[j])

        go_left = np.zeros(self.X.shape[0], dtype=bool)
        go_left[sub[: k + 1, j]] = True
        mask = go_left[order_mat]
        n_left = k + 1
        left_mat = order_mat.T[mask.T].reshape(order_mat.shape[1], n_left).T
        right_mat = order_mat.T[~mask.T].reshape(order_mat.shape[1], m - n_left).T

        node_id = len(self.nodes)
        self.nodes.append([feature, float(thr), -1, -1, float(m), 0.0])
        left_id = self._grow(left_mat, depth + 1)
        right_id = self._grow(right_mat, depth + 1)
        self.nodes[node_id][2] = left_id
        self.nodes[node_id][3] = right_id
        return node_id

    def finish(self) -> RegressionTree:
        cols = list(zip(*self.nodes))
        tree = RegressionTree(
            feature=cols[0], threshold=cols[1], left=cols[2], right=cols[3],
            cover=cols[4], weight=cols[5],
            default_left=np.ones(len(self.nodes), dtype=bool),
        )
        return tree


def fit_tree(
    X,
    gradients: np.ndarray,
    hessians: np.ndarray,
    params: HyperParams,
    row_mask: Optional[np.ndarray] = None,
    col_mask: Optional[np.ndarray] = None,
) -> RegressionTree:
    """Fit one regression tree to gradient/hessian statistics.

    ``row_mask``/``col_mask`` restrict the search to a subset of rows and
    features (boolean masks or index arrays). Degenerate input yields a
    single leaf; a split is kept only when its gain is strictly positive and
    both children carry at least ``min_child_weight`` hessian mass.
    """
    Xa = _as_array(X)
    g = np.asarray(gradients, dtype=np.float64)
    h = np.asarray(hessians, dtype=np.float64)
    n, p = Xa.shape
    if g.shape != (n,) or h.shape != (n,):
        raise DimensionMismatch("gradients/hessians must match the row count")

    rows = np.arange(n) if row_mask is None else _as_index(row_mask, n)
    cols = np.arange(p) if col_mask is None else _as_index(col_mask, p)
    if rows.size == 0 or cols.size == 0:
        raise InvalidParams("row and column masks must be non-empty")

    builder = _TreeBuilder(
        Xa, g, h,
        reg_lambda=params.reg_lambda, gamma=params.gamma,
        min_child_weight=params.min_child_weight, max_depth=params.max_depth,
    )
    builder.build(rows, cols)
    return builder.finish()


def _as_index(mask: np.ndarray, size: int) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.dtype == bool:
        if mask.shape != (size,):
            raise DimensionMismatch("boolean mask has wrong length")
        return np.nonzero(mask)[0]
    return np.sort(mask.astype(np.int64))


@dataclass
class GbdtModel:
    """Trained boosted ensemble: prediction = base_score + lr * sum of leaf
    weights."""

    trees: list[RegressionTree]
    params: HyperParams
    feature_names: list[str]
    training_rows: int
    base_score: float

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def predict(self, x: Sequence[float]) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_features,):
            raise DimensionMismatch(
                f"expected {self.n_features} features, got {x.shape}"
            )
        acc = self.base_score
        lr = self.params.learning_rate
        for tree in self.trees:
            acc += lr * tree.predict_row(x)
        return float(acc)

    def predict_rows(self, X, tree_limit: Optional[int] = None) -> np.ndarray:
        Xa = _as_array(X)
        if Xa.ndim != 2 or Xa.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"expected {self.n_features} feature columns, got {Xa.shape}"
            )
        out = np.full(Xa.shape[0], self.base_score, dtype=np.float64)
        trees = self.trees if tree_limit is None else self.trees[:tree_limit]
        lr = self.params.learning_rate
        for tree in trees:
            out += lr * tree.predict_matrix(Xa)
        return out

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "feature_names": list(self.feature_names),
            "base_score": float(self.base_score),
            "training_rows": int(self.training_rows),
            "trees": [{"nodes": tree.to_nodes()} for tree in self.trees],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GbdtModel":
        return cls(
            trees=[RegressionTree.from_nodes(t["nodes"]) for t in doc["trees"]],
            params=HyperParams.from_dict(doc["params"]),
            feature_names=list(doc["feature_names"]),
            training_rows=int(doc["training_rows"]),
            base_score=float(doc["base_score"]),
        )


def fit_gbdt(X, y: np.ndarray, params: HyperParams) -> GbdtModel:
    """Train the boosted ensemble on a squared-error objective.

    Round t fits a tree to g = prediction - target, h = 1 on a per-round
    row/column sample drawn from the seeded generator, then shrinks the
    tree's contribution by the learning rate.
    """
    Xa = _as_array(X)
    y = np.asarray(y, dtype=np.float64)
    n, p = Xa.shape
    if n < 2:
        raise InvalidParams(f"need at least 2 rows, got {n}")
    if y.shape != (n,):
        raise DimensionMismatch("target length does not match matrix rows")
    if not (np.isfinite(Xa).all() and np.isfinite(y).all()):
        raise InvalidParams("training data must be finite (no NaN/Inf)")

    # train in canonical row order so the fitted trees do not depend on how
    # the caller happened to order the rows
    canon = canonical_row_order(Xa, y)
    Xa = np.ascontiguousarray(Xa[canon])
    y = y[canon]

    base = params.base_score
    if base is None:
        base = float(np.sum(y)) / n
    base = float(base)

    rng = np.random.default_rng(params.seed)
    pred = np.full(n, base, dtype=np.float64)
    hess = np.ones(n, dtype=np.float64)
    all_rows = np.arange(n)
    all_cols = np.arange(p)
    trees: list[RegressionTree] = []

    for _ in range(params.n_estimators):
        grad = pred - y
        if params.subsample < 1.0:
            k = max(1, int(round(n * params.subsample)))
            rows = np.sort(rng.choice(n, size=k, replace=False))
        else:
            rows = all_rows
        if params.colsample_bytree < 1.0:
            c = max(1, int(round(p * params.colsample_bytree)))
            cols = np.sort(rng.choice(p, size=c, replace=False))
        else:
            cols = all_cols

        builder = _TreeBuilder(
            Xa, grad, hess,
            reg_lambda=params.reg_lambda, gamma=params.gamma,
            min_child_weight=params.min_child_weight, max_depth=params.max_depth,
        )
        builder.build(rows, cols)
        tree = builder.finish()
        trees.append(tree)
        pred += params.learning_rate * tree.predict_matrix(Xa)

    return GbdtModel(
        trees=trees,
        params=params,
        feature_names=_feature_names_of(X, p),
        training_rows=n,
        base_score=base,
    )


@dataclass
class BaselineModel:
    """Reference regressors used for performance comparison."""

    kind: str  # "linear" | "random_forest"
    coefficients: Optional[np.ndarray] = None
    intercept: float = 0.0
    trees: list[RegressionTree] = field(default_factory=list)
    feature_names: list[str] = field(default_factory=list)

    def predict_rows(self, X) -> np.ndarray:
        Xa = _as_array(X)
        if self.kind == "linear":
            return Xa @ self.coefficients + self.intercept
        preds = np.zeros(Xa.shape[0], dtype=np.float64)
        for tree in self.trees:
            preds += tree.predict_matrix(Xa)
        return preds / len(self.trees)


def fit_linear_regression(X, y: np.ndarray, ridge_epsilon: float = 0.0) -> BaselineModel:
    """Least squares via the normal equations, with an optional tiny ridge
    penalty on the coefficients (the intercept is never penalized)."""
    Xa = _as_array(X)
    y = np.asarray(y, dtype=np.float64)
    n, p = Xa.shape
    if ridge_epsilon < 0:
        raise InvalidParams("ridge_epsilon must be >= 0")

    x_mean = Xa.mean(axis=0)
    y_mean = float(y.mean())
    Xc = Xa - x_mean
    yc = y - y_mean

    if ridge_epsilon == 0.0:
        if n < p or np.linalg.matrix_rank(Xc) < p:
            raise SingularSystem(
                "design matrix is rank-deficient; use ridge_epsilon > 0"
            )
    A = Xc.T @ Xc + ridge_epsilon * np.eye(p)
    b = Xc.T @ yc
    try:
        beta = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    intercept = y_mean - float(x_mean @ beta)
    return BaselineModel(
        kind="linear",
        coefficients=beta,
        intercept=intercept,
        feature_names=_feature_names_of(X, p),
    )


def fit_random_forest(
    X,
    y: np.ndarray,
    n_trees: int,
    max_depth: Optional[int] = None,
    seed: int = 0,
    bootstrap: bool = True,
) -> BaselineModel:
    """Bagged variance-reduction CART trees with sqrt(p) feature sampling
    drawn independently at every split; prediction is the tree mean."""
    if n_trees < 1:
        raise InvalidParams("n_trees must be >= 1")
    Xa = _as_array(X)
    y = np.asarray(y, dtype=np.float64)
    n, p = Xa.shape
    depth_cap = max_depth if max_depth is not None else 64
    if depth_cap < 1:
        raise InvalidParams("max_depth must be >= 1")
    n_sampled = max(1, int(round(math.sqrt(p))))

    seeds = np.random.SeedSequence(seed).spawn(n_trees)
    trees = []
    all_cols = np.arange(p)
    for t in range(n_trees):
        rng = np.random.default_rng(seeds[t])
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        # variance-reduction CART == second-order tree on g = -y, h = 1:
        # leaf weight -G/H is then the node mean of y
        g = -y
        h = np.ones(n, dtype=np.float64)

        def sample_cols() -> np.ndarray:
            if n_sampled >= p:
                return np.arange(p)
            return np.sort(rng.choice(p, size=n_sampled, replace=False))

        builder = _TreeBuilder(
            Xa, g, h, reg_lambda=0.0, gamma=0.0, min_child_weight=1.0,
            max_depth=depth_cap, col_sampler=sample_cols,
        )
        builder.build(np.sort(rows), all_cols)
        trees.append(builder.finish())

    return BaselineModel(
        kind="random_forest", trees=trees, feature_names=_feature_names_of(X, p)
    )
