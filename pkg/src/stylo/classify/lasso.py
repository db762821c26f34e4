"""L1-penalized logistic regression via cyclic coordinate descent.

Binary only (the pairwise human-vs-one-model setting). Features are
standardized with training statistics; each coordinate update minimizes a
quadratic majorizer of the logistic loss (curvature bound 1/4), so the
penalized objective never increases across sweeps. At lambda >= lambda_max
every soft-threshold update is zero and the coefficient vector stays
exactly at the origin.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceError, ModelError
from ..matrix import FeatureMatrix

FORMAT_NAME = "stylo-lasso"
FORMAT_VERSION = 1

MAX_SWEEPS = 20_000
TOL = 1e-9


@dataclass
class LassoModel:
    class_labels: tuple[str, ...]       # (negative, positive), sorted
    feature_ids: tuple[str, ...]
    coefficients: np.ndarray            # on standardized features
    intercept: float
    lam: float
    feature_means: np.ndarray
    feature_sds: np.ndarray
    cv_table: list[dict] | None = None  # lambda -> mean/sd of fold accuracy

    def to_json(self, metadata: dict[str, str] | None = None) -> str:
        payload = {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            **({"metadata": metadata} if metadata else {}),
            "class_labels": list(self.class_labels),
            "feature_ids": list(self.feature_ids),
            "coefficients": [repr(v) for v in self.coefficients.tolist()],
            "intercept": repr(self.intercept),
            "lambda": repr(self.lam),
            "feature_means": [repr(v) for v in self.feature_means.tolist()],
            "feature_sds": [repr(v) for v in self.feature_sds.tolist()],
            "cv_table": self.cv_table,
        }
        return json.dumps(payload, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "LassoModel":
        payload = json.loads(text)
        if payload.get("format") != FORMAT_NAME:
            raise ModelError(f"not a {FORMAT_NAME} file")
        if payload.get("version") != FORMAT_VERSION:
            raise ModelError(f"unsupported {FORMAT_NAME} version {payload.get('version')}")
        return cls(
            class_labels=tuple(payload["class_labels"]),
            feature_ids=tuple(payload["feature_ids"]),
            coefficients=np.array([float(v) for v in payload["coefficients"]]),
            intercept=float(payload["intercept"]),
            lam=float(payload["lambda"]),
            feature_means=np.array([float(v) for v in payload["feature_means"]]),
            feature_sds=np.array([float(v) for v in payload["feature_sds"]]),
            cv_table=payload.get("cv_table"),
        )


def _standardize_params(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    means = X.mean(axis=0)
    sds = X.std(axis=0)
    sds = np.where(sds == 0.0, 1.0, sds)
    return means, sds


def objective(X: np.ndarray, t: np.ndarray, w: np.ndarray, b: float, lam: float) -> float:
    """Mean logistic loss plus L1 penalty on the coefficients."""
    z = b + X @ w
    # log(1 + e^z) - t*z, computed stably
    loss = np.logaddexp(0.0, z) - t * z
    return float(loss.mean() + lam * np.abs(w).sum())


def _soft_threshold(value: float, threshold: float) -> float:
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def lambda_max(X: np.ndarray, t: np.ndarray) -> float:
    """Smallest penalty at which the all-zero coefficient vector is optimal."""
    p_bar = t.mean()
    gradients = X.T @ (np.full(len(t), p_bar) - t) / len(t)
    return float(np.max(np.abs(gradients)))


def _fit_standardized(
    X: np.ndarray,
    t: np.ndarray,
    lam: float,
    max_sweeps: int = MAX_SWEEPS,
    tol: float = TOL,
    trace: list[float] | None = None,
    warm_start: tuple[np.ndarray, float] | None = None,
) -> tuple[np.ndarray, float]:
    n, p = X.shape
    p_bar = t.mean()
    if warm_start is not None:
        w = warm_start[0].copy()
        b = warm_start[1]
    else:
        w = np.zeros(p)
        b = float(np.log(p_bar / (1.0 - p_bar)))
    z = b + X @ w
    # curvature bound for the majorizer: (1/4n) * sum x_j^2
    curvatures = 0.25 * np.einsum("ij,ij->j", X, X) / n
    pi = 1.0 / (1.0 + np.exp(-z))
    stale = False

    def sweep(indices) -> float:
        nonlocal b, z, pi, stale
        max_change = 0.0
        for j in indices:
            if curvatures[j] == 0.0:
                continue
            if stale:
                pi = 1.0 / (1.0 + np.exp(-z))
                stale = False
            gradient = float(X[:, j] @ (pi - t)) / n
            new_wj = _soft_threshold(w[j] - gradient / curvatures[j], lam / curvatures[j])
            if new_wj != w[j]:
                z += (new_wj - w[j]) * X[:, j]
                max_change = max(max_change, abs(new_wj - w[j]))
                w[j] = new_wj
                stale = True
        if stale:
            pi = 1.0 / (1.0 + np.exp(-z))
            stale = False
        step_b = float(np.mean(pi - t)) / 0.25
        if step_b != 0.0:
            b -= step_b
            z[:] = z - step_b
            max_change = max(max_change, abs(step_b))
            stale = True
        if trace is not None:
            trace.append(objective(X, t, w, b, lam))
        return max_change

    last_delta = 0.0
    if trace is not None:
        trace.append(objective(X, t, w, b, lam))
    sweeps_used = 0
    while sweeps_used < max_sweeps:
        last_delta = sweep(range(p))
        sweeps_used += 1
        if last_delta < tol:
            return w, b
        # cheap inner passes over the active set, then re-check all coordinates
        active = np.flatnonzero(w).tolist()
        while active and sweeps_used < max_sweeps:
            if sweep(active) < tol:
                break
            sweeps_used += 1
    raise ConvergenceError(
        f"lasso did not converge in {max_sweeps} sweeps (last delta {last_delta:.3e})",
        last_delta,
    )


def default_lambda_grid(lam_max: float, size: int = 20) -> list[float]:
    return list(lam_max * np.logspace(0.0, -2.0, size))


def train_lasso(
    train: FeatureMatrix,
    lambda_grid: list[float] | None = None,
    folds: int = 5,
    seed: int = 0,
) -> LassoModel:
    """Fit a binary lasso-logistic model, selecting lambda by CV accuracy.

    Lambda selection uses the one-standard-error rule: the most penalized
    lambda whose mean fold accuracy is within one SE of the best.
    """
    labels = tuple(sorted(set(train.sources)))
    if len(labels) != 2:
        raise ModelError(f"lasso requires exactly 2 classes, found {len(labels)}")
    X_raw = np.asarray(train.values, dtype=float)
    if np.isnan(X_raw).any():
        raise ModelError("training matrix contains missing values; drop or repair those rows")
    t = np.array([1.0 if s == labels[1] else 0.0 for s in train.sources])

    means, sds = _standardize_params(X_raw)
    X = (X_raw - means) / sds

    if lambda_grid is None:
        lambda_grid = default_lambda_grid(lambda_max(X, t))
    lambda_grid = sorted(lambda_grid, reverse=True)

    cv_table: list[dict] | None = None
    if len(lambda_grid) > 1:
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(t))
        fold_ids = np.array_split(order, folds)
        accuracy = np.zeros((len(lambda_grid), folds))
        for k, held_out in enumerate(fold_ids):
            held_mask = np.zeros(len(t), dtype=bool)
            held_mask[held_out] = True
            X_fit_raw, t_fit = X_raw[~held_mask], t[~held_mask]
            X_val_raw, t_val = X_raw[held_mask], t[held_mask]
            fold_means, fold_sds = _standardize_params(X_fit_raw)
            X_fit = (X_fit_raw - fold_means) / fold_sds
            X_val = (X_val_raw - fold_means) / fold_sds
            warm: tuple[np.ndarray, float] | None = None
            for g, lam in enumerate(lambda_grid):
                w, b = _fit_standardized(X_fit, t_fit, lam, warm_start=warm)
                warm = (w, b)
                predicted = (b + X_val @ w) >= 0.0
                accuracy[g, k] = float(np.mean(predicted == (t_val == 1.0)))
        means_acc = accuracy.mean(axis=1)
        best = int(np.argmax(means_acc))
        se = float(np.std(accuracy[best], ddof=1) / np.sqrt(folds)) if folds > 1 else 0.0
        eligible = [g for g in range(len(lambda_grid)) if means_acc[g] >= means_acc[best] - se]
        chosen = min(eligible)          # grid is descending: smallest index = largest lambda
        lam = lambda_grid[chosen]
        cv_table = [
            {
                "lambda": lambda_grid[g],
                "mean_accuracy": float(means_acc[g]),
                "sd_accuracy": float(np.std(accuracy[g], ddof=1)) if folds > 1 else 0.0,
            }
            for g in range(len(lambda_grid))
        ]
    else:
        lam = lambda_grid[0]

    w, b = _fit_standardized(X, t, lam)
    return LassoModel(
        class_labels=labels,
        feature_ids=train.feature_ids,
        coefficients=w,
        intercept=b,
        lam=lam,
        feature_means=means,
        feature_sds=sds,
        cv_table=cv_table,
    )


def predict_lasso(model: LassoModel, rows: FeatureMatrix) -> tuple[list[str], np.ndarray]:
    """Labels by maximum class score; scores are (P(neg), P(pos)) per row."""
    if rows.feature_ids != model.feature_ids:
        missing = [f for f in model.feature_ids if f not in rows.feature_ids]
        if missing:
            raise ModelError(f"rows are missing feature column {missing[0]!r}")
        raise ModelError("feature columns do not match the model's catalog order")
    X = (np.asarray(rows.values, dtype=float) - model.feature_means) / model.feature_sds
    z = model.intercept + X @ model.coefficients
    positive = 1.0 / (1.0 + np.exp(-z))
    scores = np.column_stack([1.0 - positive, positive])
    predictions = [
        model.class_labels[1] if p >= 0.5 else model.class_labels[0] for p in positive
    ]
    return predictions, scores
