"""Deterministic, group-aware train/test splitting of feature matrices.

Rows sharing a parent document id (a human chunk and the LLM continuations
prompted from the same text) always land on the same side, so paired texts
never leak across the split.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..corpus_io import parent_doc_id
from ..errors import ModelError
from ..matrix import FeatureMatrix


@dataclass(frozen=True, slots=True)
class DatasetSplit:
    train_fraction: float = 0.75
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ModelError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


def split(matrix: FeatureMatrix, spec: DatasetSplit) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Partition rows into train/test, stratified by source at group level."""
    class_counts = Counter(matrix.sources)
    if len(class_counts) < 1 or len(matrix) == 0:
        raise ModelError("cannot split an empty matrix")
    for label, count in sorted(class_counts.items()):
        if count < 2:
            raise ModelError(f"class {label!r} has only {count} row(s); need at least 2")

    groups: dict[str, list[int]] = {}
    for i, doc_id in enumerate(matrix.doc_ids):
        groups.setdefault(parent_doc_id(doc_id), []).append(i)

    # Strata are group class-compositions, so assigning whole groups keeps
    # per-class proportions as close as group sizes allow.
    strata: dict[tuple, list[str]] = {}
    for key in sorted(groups):
        if spec.stratified:
            signature = tuple(sorted(Counter(matrix.sources[i] for i in groups[key]).items()))
        else:
            signature = ("all",)
        strata.setdefault(signature, []).append(key)

    rng = np.random.default_rng(spec.seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for signature in sorted(strata):
        keys = strata[signature]
        order = rng.permutation(len(keys))
        n_train = int(len(keys) * spec.train_fraction + 0.5)
        n_train = min(max(n_train, 1), len(keys) - 1) if len(keys) >= 2 else n_train
        for rank, position in enumerate(order):
            target = train_idx if rank < n_train else test_idx
            target.extend(groups[keys[position]])

    train_idx.sort()
    test_idx.sort()
    return matrix.subset(train_idx), matrix.subset(test_idx)
