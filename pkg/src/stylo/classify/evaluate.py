"""Model evaluation: confusion matrices and cross-corpus transfer checks."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from ..errors import ModelError
from ..matrix import FeatureMatrix
from .forest import ForestModel, predict_forest
from .lasso import LassoModel, predict_lasso


@dataclass
class ConfusionMatrix:
    labels: tuple[str, ...]
    counts: np.ndarray                  # rows = true, columns = predicted

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total)

    @property
    def rates(self) -> np.ndarray:
        """Per-cell rates relative to the evaluation-set size."""
        return self.counts / self.total

    def _human_mask(self, human_labels: set[str] | None) -> np.ndarray:
        if human_labels is None:
            human_labels = {l for l in self.labels if l.startswith("human")}
        return np.array([l in human_labels for l in self.labels])

    def llm_to_human_rate(self, human_labels: set[str] | None = None) -> float | None:
        """Fraction of non-human rows predicted as any human label."""
        human = self._human_mask(human_labels)
        if not human.any() or human.all():
            return None
        llm_rows = self.counts[~human]
        return float(llm_rows[:, human].sum() / llm_rows.sum())

    def human_to_llm_rate(self, human_labels: set[str] | None = None) -> float | None:
        """Fraction of human rows predicted as any non-human label."""
        human = self._human_mask(human_labels)
        if not human.any() or human.all():
            return None
        human_rows = self.counts[human]
        return float(human_rows[:, ~human].sum() / human_rows.sum())

    def to_csv(self, metadata: dict[str, str] | None = None) -> str:
        buffer = io.StringIO()
        for key, value in (metadata or {}).items():
            buffer.write(f"# {key} = {value}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["true\\predicted", *self.labels])
        for i, label in enumerate(self.labels):
            writer.writerow([label, *(int(c) for c in self.counts[i])])
        return buffer.getvalue()

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "counts": [[int(c) for c in row] for row in self.counts],
            "accuracy": self.accuracy,
            "llm_to_human_rate": self.llm_to_human_rate(),
            "human_to_llm_rate": self.human_to_llm_rate(),
        }


def predict(model: ForestModel | LassoModel, rows: FeatureMatrix) -> tuple[list[str], np.ndarray]:
    if isinstance(model, ForestModel):
        return predict_forest(model, rows)
    if isinstance(model, LassoModel):
        return predict_lasso(model, rows)
    raise ModelError(f"unsupported model type {type(model).__name__}")


def evaluate(model: ForestModel | LassoModel, test: FeatureMatrix) -> ConfusionMatrix:
    """Full labels x labels confusion counts over a held-out matrix.

    Test rows with labels unseen at training get their own rows in the
    matrix (they can only be misclassified).
    """
    if len(test) == 0:
        raise ModelError("evaluation set is empty")
    predictions, _ = predict(model, test)
    labels = tuple(sorted(set(model.class_labels) | set(test.sources)))
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=int)
    for true, predicted in zip(test.sources, predictions):
        counts[index[true], index[predicted]] += 1
    return ConfusionMatrix(labels, counts)


def cross_corpus_eval(
    model: ForestModel | LassoModel,
    foreign: FeatureMatrix,
    train_corpus: str = "train-corpus",
    eval_corpus: str = "foreign-corpus",
) -> tuple[ConfusionMatrix, dict]:
    """Evaluate on a matrix from another corpus sharing the feature catalog."""
    if foreign.feature_ids != model.feature_ids:
        raise ModelError(
            "foreign matrix uses a different feature catalog; "
            f"first mismatch: {next(iter(set(foreign.feature_ids) ^ set(model.feature_ids)), '?')!r}"
        )
    matrix = evaluate(model, foreign)
    report = {
        "trained_on": train_corpus,
        "evaluated_on": eval_corpus,
        **matrix.to_dict(),
    }
    return matrix, report
