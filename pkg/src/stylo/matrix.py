"""Feature matrix container shared by the tagger, statistics, and classifiers.

CSV layout: optional ``# key = value`` metadata comment lines, then a header
row ``doc_id, source, word_count, <feature ids in catalog order>``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def _format_number(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return ""
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


@dataclass
class FeatureMatrix:
    feature_ids: tuple[str, ...]
    doc_ids: list[str] = field(default_factory=list)
    sources: list[str] = field(default_factory=list)
    word_counts: list[int] = field(default_factory=list)
    values: np.ndarray = None  # (n_docs, n_features)

    def __post_init__(self):
        if self.values is None:
            self.values = np.zeros((0, len(self.feature_ids)))
        self.values = np.asarray(self.values, dtype=float)

    def __len__(self) -> int:
        return len(self.doc_ids)

    @property
    def n_features(self) -> int:
        return len(self.feature_ids)

    def append(self, doc_id: str, source: str, word_count: int, row: np.ndarray):
        if len(row) != self.n_features:
            raise ValueError(f"row has {len(row)} values, expected {self.n_features}")
        self.doc_ids.append(doc_id)
        self.sources.append(source)
        self.word_counts.append(int(word_count))
        self.values = np.vstack([self.values, np.asarray(row, dtype=float)])

    def column(self, feature_id: str) -> np.ndarray:
        try:
            j = self.feature_ids.index(feature_id)
        except ValueError:
            raise KeyError(f"unknown feature id {feature_id!r}") from None
        return self.values[:, j]

    def subset(self, indices: list[int]) -> "FeatureMatrix":
        return FeatureMatrix(
            feature_ids=self.feature_ids,
            doc_ids=[self.doc_ids[i] for i in indices],
            sources=[self.sources[i] for i in indices],
            word_counts=[self.word_counts[i] for i in indices],
            values=self.values[indices, :],
        )

    def to_csv(self, metadata: dict[str, str] | None = None) -> str:
        buffer = io.StringIO()
        for key, value in (metadata or {}).items():
            buffer.write(f"# {key} = {value}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["doc_id", "source", "word_count", *self.feature_ids])
        for i, doc_id in enumerate(self.doc_ids):
            writer.writerow([
                doc_id,
                self.sources[i],
                self.word_counts[i],
                *(_format_number(v) for v in self.values[i]),
            ])
        return buffer.getvalue()

    def save(self, path: str | Path, metadata: dict[str, str] | None = None):
        Path(path).write_text(self.to_csv(metadata), encoding="utf-8")

    @classmethod
    def from_csv(cls, text: str) -> "FeatureMatrix":
        rows = [
            line for line in text.splitlines()
            if line.strip() and not line.startswith("#")
        ]
        reader = csv.reader(rows)
        header = next(reader)
        if header[:3] != ["doc_id", "source", "word_count"]:
            raise ValueError("feature matrix CSV must start with doc_id, source, word_count")
        feature_ids = tuple(header[3:])
        matrix = cls(feature_ids=feature_ids)
        doc_ids, sources, word_counts, values = [], [], [], []
        for row in reader:
            doc_ids.append(row[0])
            sources.append(row[1])
            word_counts.append(int(row[2]))
            values.append([float(v) if v != "" else math.nan for v in row[3:]])
        matrix.doc_ids = doc_ids
        matrix.sources = sources
        matrix.word_counts = word_counts
        matrix.values = (
            np.asarray(values, dtype=float)
            if values else np.zeros((0, len(feature_ids)))
        )
        return matrix

    @classmethod
    def load(cls, path: str | Path) -> "FeatureMatrix":
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))
