"""Random forest classifier: axis-aligned Gini trees over feature matrices.

Training is bit-deterministic given (data, params, seed): every tree draws
its bootstrap sample and feature subsets from an independent generator
spawned from the master seed, so trees could be fit concurrently and still
reproduce the serial result.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import ModelError
from ..matrix import FeatureMatrix

FORMAT_NAME = "stylo-forest"
FORMAT_VERSION = 1


@dataclass(frozen=True, slots=True)
class ForestParams:
    n_trees: int = 500
    max_features: int | None = None     # default floor(sqrt(n_features))
    min_leaf: int = 1
    max_depth: int | None = None
    seed: int = 0


@dataclass
class ForestModel:
    params: ForestParams
    class_labels: tuple[str, ...]
    feature_ids: tuple[str, ...]
    trees: list[dict]
    importances: np.ndarray            # per-feature, normalized to sum 1

    def to_json(self, metadata: dict[str, str] | None = None) -> str:
        payload = {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            **({"metadata": metadata} if metadata else {}),
            "params": {
                "n_trees": self.params.n_trees,
                "max_features": self.params.max_features,
                "min_leaf": self.params.min_leaf,
                "max_depth": self.params.max_depth,
                "seed": self.params.seed,
            },
            "class_labels": list(self.class_labels),
            "feature_ids": list(self.feature_ids),
            "importances": [repr(v) for v in self.importances.tolist()],
            "trees": self.trees,
        }
        return json.dumps(payload, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ForestModel":
        payload = json.loads(text)
        if payload.get("format") != FORMAT_NAME:
            raise ModelError(f"not a {FORMAT_NAME} file")
        if payload.get("version") != FORMAT_VERSION:
            raise ModelError(f"unsupported {FORMAT_NAME} version {payload.get('version')}")
        return cls(
            params=ForestParams(**payload["params"]),
            class_labels=tuple(payload["class_labels"]),
            feature_ids=tuple(payload["feature_ids"]),
            trees=payload["trees"],
            importances=np.array([float(v) for v in payload["importances"]]),
        )


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p * p))


def _build_tree(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    params: ForestParams,
    max_features: int,
    rng: np.random.Generator,
    importance: np.ndarray,
    n_total: int,
    depth: int = 0,
) -> dict:
    counts = np.bincount(y, minlength=n_classes)
    node_gini = _gini(counts)
    n = len(y)
    if (
        node_gini == 0.0
        or n < 2 * params.min_leaf
        or n < 2
        or (params.max_depth is not None and depth >= params.max_depth)
    ):
        return {"leaf": counts.tolist()}

    features = np.sort(rng.choice(X.shape[1], size=max_features, replace=False))
    best_gain = 0.0
    best_feature = -1
    best_threshold = 0.0
    for f in features:
        values = X[:, f]
        order = np.argsort(values, kind="stable")
        sorted_vals = values[order]
        sorted_y = y[order]
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), sorted_y] = 1.0
        left_cum = np.cumsum(onehot, axis=0)
        total = left_cum[-1]
        # candidate cut after position i (1-based sizes), only between distinct values
        cut_sizes = np.arange(1, n)
        distinct = sorted_vals[:-1] < sorted_vals[1:]
        valid = distinct & (cut_sizes >= params.min_leaf) & ((n - cut_sizes) >= params.min_leaf)
        if not np.any(valid):
            continue
        left_counts = left_cum[:-1][valid]
        right_counts = total - left_counts
        nl = cut_sizes[valid].astype(float)
        nr = n - nl
        gini_left = 1.0 - np.sum((left_counts / nl[:, None]) ** 2, axis=1)
        gini_right = 1.0 - np.sum((right_counts / nr[:, None]) ** 2, axis=1)
        weighted = (nl * gini_left + nr * gini_right) / n
        gains = node_gini - weighted
        k = int(np.argmax(gains))
        if gains[k] > best_gain:
            best_gain = float(gains[k])
            best_feature = int(f)
            positions = np.flatnonzero(valid)
            cut = positions[k]
            best_threshold = float((sorted_vals[cut] + sorted_vals[cut + 1]) / 2.0)

    if best_feature < 0 or best_gain <= 0.0:
        return {"leaf": counts.tolist()}

    importance[best_feature] += (n / n_total) * best_gain
    mask = X[:, best_feature] < best_threshold
    left = _build_tree(X[mask], y[mask], n_classes, params, max_features, rng,
                       importance, n_total, depth + 1)
    right = _build_tree(X[~mask], y[~mask], n_classes, params, max_features, rng,
                        importance, n_total, depth + 1)
    return {"f": best_feature, "t": best_threshold, "l": left, "r": right}


def train_forest(train: FeatureMatrix, params: ForestParams = ForestParams()) -> ForestModel:
    labels = tuple(sorted(set(train.sources)))
    if len(labels) < 2:
        raise ModelError("forest training requires at least two classes")
    X = np.asarray(train.values, dtype=float)
    if np.isnan(X).any():
        raise ModelError("training matrix contains missing values; drop or repair those rows")
    label_index = {label: i for i, label in enumerate(labels)}
    y = np.array([label_index[s] for s in train.sources])
    n, p = X.shape
    max_features = params.max_features or max(1, int(np.sqrt(p)))
    if not 1 <= max_features <= p:
        raise ModelError(f"max_features must be in [1, {p}], got {max_features}")

    master = np.random.SeedSequence(params.seed)
    tree_seeds = master.spawn(params.n_trees)
    trees = []
    tree_importances = np.zeros((params.n_trees, p))
    for t in range(params.n_trees):
        rng = np.random.default_rng(tree_seeds[t])
        sample = rng.integers(0, n, size=n)
        trees.append(_build_tree(
            X[sample], y[sample], len(labels), params, max_features, rng,
            tree_importances[t], n_total=n,
        ))

    mean_importance = tree_importances.mean(axis=0)
    total = mean_importance.sum()
    if total <= 0.0:
        warnings.warn("no informative splits; reporting uniform feature importances")
        mean_importance = np.full(p, 1.0 / p)
    else:
        mean_importance = mean_importance / total

    return ForestModel(
        params=params,
        class_labels=labels,
        feature_ids=train.feature_ids,
        trees=trees,
        importances=mean_importance,
    )


def _tree_vote(tree: dict, row: np.ndarray, n_classes: int) -> int:
    node = tree
    while "leaf" not in node:
        node = node["l"] if row[node["f"]] < node["t"] else node["r"]
    counts = node["leaf"]
    # lowest class index wins ties; labels are stored sorted
    return int(np.argmax(counts))


def predict_forest(model: ForestModel, rows: FeatureMatrix) -> tuple[list[str], np.ndarray]:
    """Majority vote over trees; scores are per-class vote fractions."""
    if rows.feature_ids != model.feature_ids:
        missing = [f for f in model.feature_ids if f not in rows.feature_ids]
        if missing:
            raise ModelError(f"rows are missing feature column {missing[0]!r}")
        raise ModelError("feature columns do not match the model's catalog order")
    X = np.asarray(rows.values, dtype=float)
    k = len(model.class_labels)
    votes = np.zeros((len(rows), k))
    for tree in model.trees:
        for i in range(len(rows)):
            votes[i, _tree_vote(tree, X[i], k)] += 1
    scores = votes / max(1, len(model.trees))
    predictions = [model.class_labels[int(np.argmax(v))] for v in votes]
    return predictions, scores


@dataclass(frozen=True, slots=True)
class ImportanceRanking:
    entries: tuple[tuple[str, float], ...]   # (feature id, score), descending

    def feature_order(self) -> list[str]:
        return [fid for fid, _ in self.entries]

    def top(self, k: int) -> list[tuple[str, float]]:
        return list(self.entries[:k])


def gini_importance(model: ForestModel) -> ImportanceRanking:
    """Mean impurity-decrease ranking, normalized to sum to one."""
    order = np.argsort(-model.importances, kind="stable")
    entries = tuple(
        (model.feature_ids[j], float(model.importances[j])) for j in order
    )
    return ImportanceRanking(entries)
