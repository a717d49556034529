"""Regression metrics, k-fold cross-validation, randomized hyperparameter
search, and the boosting-rounds performance curve."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import EmptySpace, InvalidParams, LengthMismatch, TooFewRows, ZeroVarianceTarget
from .gbdt import GbdtModel, HyperParams, fit_gbdt


@dataclass
class Metrics:
    """Standard regression error summary.

    For values produced by ``regression_metrics``, rmse**2 == mse and
    mae <= rmse. Fold averages are plain arithmetic means per field, so
    those identities are not enforced structurally.
    """

    mae: float
    mse: float
    rmse: float
    r2: float

    def to_dict(self) -> dict:
        return {"mae": self.mae, "mse": self.mse, "rmse": self.rmse, "r2": self.r2}

    @classmethod
    def from_dict(cls, doc: dict) -> "Metrics":
        return cls(mae=doc["mae"], mse=doc["mse"], rmse=doc["rmse"], r2=doc["r2"])


def regression_metrics(y_true: np.ndarray, y_pred: np.ndarray) -> Metrics:
    """MAE, MSE, RMSE and R^2 = 1 - SS_res/SS_tot (SS_tot about the mean of
    the evaluated targets)."""
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1 or y_true.size == 0:
        raise LengthMismatch(
            f"incompatible shapes: {y_true.shape} vs {y_pred.shape}"
        )
    err = y_pred - y_true
    mae = float(np.mean(np.abs(err)))
    mse = float(np.mean(err * err))
    rmse = math.sqrt(mse)
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        raise ZeroVarianceTarget("R^2 undefined: targets are all identical")
    r2 = 1.0 - float(np.sum(err * err)) / ss_tot
    return Metrics(mae=mae, mse=mse, rmse=rmse, r2=r2)


@dataclass
class ParamSpace:
    """Sampling specification per hyperparameter.

    Each entry is either ``{"choice": [...]}`` or
    ``{"low": a, "high": b, "type": "int"|"float", "log": bool}`` with
    a < b; log-scaled ranges sample uniformly in log space.
    """

    specs: dict[str, dict]

    def validate(self) -> None:
        if not self.specs:
            raise EmptySpace("parameter space has no entries")
        for name, spec in self.specs.items():
            if "choice" in spec:
                if not spec["choice"]:
                    raise InvalidParams(f"{name}: empty choice list")
            elif "low" in spec and "high" in spec:
                if not spec["low"] < spec["high"]:
                    raise InvalidParams(f"{name}: range requires low < high")
                if spec.get("log") and spec["low"] <= 0:
                    raise InvalidParams(f"{name}: log range requires low > 0")
            else:
                raise InvalidParams(f"{name}: spec needs 'choice' or 'low'/'high'")

    def sample(self, rng: np.random.Generator) -> dict:
        # exactly one uniform draw per parameter, in insertion order
        out = {}
        for name, spec in self.specs.items():
            u = rng.random()
            if "choice" in spec:
                values = spec["choice"]
                out[name] = values[min(int(u * len(values)), len(values) - 1)]
                continue
            low, high = spec["low"], spec["high"]
            if spec.get("log"):
                value = math.exp(math.log(low) + (math.log(high) - math.log(low)) * u)
            else:
                value = low + (high - low) * u
            if spec.get("type") == "int":
                if spec.get("log"):
                    out[name] = int(round(value))
                else:
                    out[name] = min(int(low) + int(u * (int(high) - int(low) + 1)), int(high))
            else:
                out[name] = float(value)
        return out

    def to_dict(self) -> dict:
        return {k: dict(v) for k, v in self.specs.items()}

    @classmethod
    def from_dict(cls, doc: dict) -> "ParamSpace":
        space = cls(specs={k: dict(v) for k, v in doc.items()})
        space.validate()
        return space


@dataclass
class CvReport:
    """Per-fold metrics, their arithmetic mean, and the fold partition."""

    fold_metrics: list[Metrics]
    mean_metrics: Metrics
    fold_assignments: np.ndarray  # row index -> fold id
    seed: int

    @property
    def k(self) -> int:
        return len(self.fold_metrics)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "folds": [m.to_dict() for m in self.fold_metrics],
            "mean": self.mean_metrics.to_dict(),
            "fold_assignments": [int(f) for f in self.fold_assignments],
        }


def fold_partition(n: int, k: int, seed: int) -> np.ndarray:
    """Seeded shuffle into k contiguous near-equal folds; returns the fold id
    of every row."""
    if k < 2:
        raise InvalidParams("k must be >= 2")
    if n < k:
        raise TooFewRows(f"need at least {k} rows for {k}-fold CV, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    base, extra = divmod(n, k)
    start = 0
    for fold in range(k):
        size = base + (1 if fold < extra else 0)
        assignments[perm[start : start + size]] = fold
        start += size
    return assignments


def _mean_metrics(folds: Sequence[Metrics]) -> Metrics:
    return Metrics(
        mae=float(np.mean([m.mae for m in folds])),
        mse=float(np.mean([m.mse for m in folds])),
        rmse=float(np.mean([m.rmse for m in folds])),
        r2=float(np.mean([m.r2 for m in folds])),
    )


def k_fold_cv(
    X,
    y: np.ndarray,
    k: int,
    trainer: Callable[[np.ndarray, np.ndarray], object],
    seed: int = 0,
) -> CvReport:
    """Train on k-1 folds and score the held-out fold, k times.

    ``trainer(X_train, y_train)`` must return an object with a
    ``predict_rows(X)`` method.
    """
    Xa = np.asarray(X.values if hasattr(X, "values") else X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = Xa.shape[0]
    assignments = fold_partition(n, k, seed)

    fold_metrics = []
    for fold in range(k):
        val = assignments == fold
        model = trainer(Xa[~val], y[~val])
        y_pred = model.predict_rows(Xa[val])
        fold_metrics.append(regression_metrics(y[val], y_pred))

    return CvReport(
        fold_metrics=fold_metrics,
        mean_metrics=_mean_metrics(fold_metrics),
        fold_assignments=assignments,
        seed=seed,
    )


def randomized_search(
    X,
    y: np.ndarray,
    space: ParamSpace,
    n_iter: int,
    k: int,
    seed: int = 0,
    fixed_params: Optional[dict] = None,
) -> tuple[HyperParams, list[dict]]:
    """Score ``n_iter`` seeded samples from the space by k-fold mean R^2.

    All samples are drawn up front, then scored in order, so the trial table
    is independent of any execution interleaving. Returns the best
    configuration (ties broken by earlier trial index) and the full table.
    """
    if n_iter < 1:
        raise InvalidParams("n_iter must be >= 1")
    space.validate()
    fixed = dict(fixed_params or {})
    fixed.setdefault("seed", seed)

    rng = np.random.default_rng(seed)
    samples = [space.sample(rng) for _ in range(n_iter)]

    trials = []
    best_idx, best_score = -1, -np.inf
    for i, sampled in enumerate(samples):
        params = HyperParams(**{**fixed, **sampled})
        report = k_fold_cv(
            X, y, k, trainer=lambda Xt, yt: fit_gbdt(Xt, yt, params), seed=seed
        )
        score = report.mean_metrics.r2
        trials.append(
            {
                "trial": i,
                "params": params.to_dict(),
                "mean_r2": score,
                "fold_r2": [m.r2 for m in report.fold_metrics],
            }
        )
        if score > best_score:
            best_idx, best_score = i, score

    best = HyperParams(**{**fixed, **samples[best_idx]})
    return best, trials


def boosting_curve(
    X_train,
    y_train: np.ndarray,
    X_test,
    y_test: np.ndarray,
    counts: Sequence[int],
    base_params: HyperParams,
) -> list[tuple[int, Metrics]]:
    """Test metrics as a function of the number of boosting rounds.

    Rounds are nested, so a single fit at the largest count is evaluated at
    each prefix; this matches round-by-round training exactly because each
    round only consumes past state.
    """
    counts = list(counts)
    if not counts or any(b <= a for a, b in zip(counts, counts[1:])):
        raise InvalidParams("counts must be strictly increasing and non-empty")
    if counts[0] < 1:
        raise InvalidParams("counts must be positive")

    params = replace(base_params, n_estimators=counts[-1])
    model = fit_gbdt(X_train, y_train, params)
    out = []
    for c in counts:
        y_pred = model.predict_rows(X_test, tree_limit=c)
        out.append((c, regression_metrics(y_test, y_pred)))
    return out


# --- tabular exports ---

def trials_to_csv(trials: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    param_keys = sorted(trials[0]["params"].keys()) if trials else []
    writer.writerow(["trial", "mean_r2"] + param_keys)
    for t in trials:
        writer.writerow(
            [t["trial"], repr(t["mean_r2"])] + [repr(t["params"][k]) for k in param_keys]
        )
    return buf.getvalue()


def cv_report_to_csv(report: CvReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["fold", "mae", "mse", "rmse", "r2"])
    for i, m in enumerate(report.fold_metrics, start=1):
        writer.writerow([f"fold_{i}", repr(m.mae), repr(m.mse), repr(m.rmse), repr(m.r2)])
    m = report.mean_metrics
    writer.writerow(["mean", repr(m.mae), repr(m.mse), repr(m.rmse), repr(m.r2)])
    return buf.getvalue()


def curve_to_csv(curve: Sequence[tuple[int, Metrics]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n_estimators", "r2", "mae"])
    for count, metrics in curve:
        writer.writerow([count, repr(metrics.r2), repr(metrics.mae)])
    return buf.getvalue()
