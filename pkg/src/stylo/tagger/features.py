"""Per-document feature extraction: raw rule counts to normalized rates.

Count features are reported per 1,000 words (non-punctuation tokens); the two
index features are mean word length in characters and the type-token ratio
over the first 400 words.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..corpus_io import AnnotatedDocument
from ..errors import EmptyDocumentError
from ..matrix import FeatureMatrix
from .catalog import FeatureCatalog
from .rules import MatchSpan, SentenceContext, match_feature

TTR_WINDOW = 400


@dataclass(frozen=True, slots=True)
class FeatureVector:
    doc_id: str
    source: str
    word_count: int
    values: dict[str, float]
    flags: tuple[str, ...] = field(default=())


def mean_word_length(doc: AnnotatedDocument) -> float:
    """Mean surface-form length in characters over non-punctuation tokens."""
    lengths = [len(t.surface_form) for t in doc.tokens() if not t.is_punct]
    if not lengths:
        raise EmptyDocumentError(f"document {doc.doc_id!r} has no words")
    return sum(lengths) / len(lengths)


def type_token_ratio(doc: AnnotatedDocument) -> float:
    """Distinct lowercased surface forms over the first 400 words.

    Documents shorter than the window use all words; tag() flags them.
    """
    words = [t.surface_form.lower() for t in doc.tokens() if not t.is_punct]
    if not words:
        raise EmptyDocumentError(f"document {doc.doc_id!r} has no words")
    window = words[:TTR_WINDOW]
    return len(set(window)) / len(window)


def count_features(
    doc: AnnotatedDocument, catalog: FeatureCatalog
) -> tuple[dict[str, int], list[MatchSpan]]:
    """Raw rule counts (index features excluded) plus the evidence spans."""
    counts = {d.id: 0 for d in catalog.defs if d.kind == "count-rate"}
    spans: list[MatchSpan] = []
    for sentence_index, sentence in enumerate(doc.sentences):
        ctx = SentenceContext(sentence)
        for d in catalog.defs:
            if d.kind != "count-rate":
                continue
            matched = match_feature(d.id, d.rule, sentence, sentence_index, catalog.lexicons, ctx)
            counts[d.id] += len(matched)
            spans.extend(matched)
    return counts, spans


def tag(
    doc: AnnotatedDocument,
    catalog: FeatureCatalog,
    evidence: bool = False,
) -> FeatureVector | tuple[FeatureVector, list[MatchSpan]]:
    """Compute the full feature vector for one document.

    Raises EmptyDocumentError when the document has no words. Documents
    without a well-formed dependency tree keep their lexical features and
    get NaN for tree-dependent ones, with a "headless" flag.
    """
    words = doc.word_count
    if words == 0:
        raise EmptyDocumentError(f"document {doc.doc_id!r} has no words")

    headless = doc.headless
    counts, spans = count_features(doc, catalog)
    values: dict[str, float] = {}
    flags: list[str] = []
    for d in catalog.defs:
        if d.kind == "index":
            if d.short_name == "mean_word_length":
                values[d.id] = mean_word_length(doc)
            else:
                values[d.id] = type_token_ratio(doc)
        elif headless and d.needs_tree:
            values[d.id] = math.nan
        else:
            values[d.id] = counts[d.id] / words * 1000.0
    if headless:
        flags.append("headless")
    if words < TTR_WINDOW:
        flags.append("ttr_short")

    vector = FeatureVector(
        doc_id=doc.doc_id,
        source=doc.source.name,
        word_count=words,
        values=values,
        flags=tuple(flags),
    )
    if evidence:
        return vector, spans
    return vector


def tag_corpus(
    docs: list[AnnotatedDocument],
    catalog: FeatureCatalog,
) -> tuple[FeatureMatrix, list[dict]]:
    """Tag every document; failures go to the error sidecar, not the matrix.

    Row order follows input order (failed documents excluded). Sidecar
    entries are {doc_id, error} dicts.
    """
    matrix = FeatureMatrix(feature_ids=catalog.feature_ids)
    sidecar: list[dict] = []
    for doc in docs:
        try:
            vector = tag(doc, catalog)
        except EmptyDocumentError as exc:
            sidecar.append({"doc_id": doc.doc_id, "error": str(exc)})
            continue
        row = [vector.values[fid] for fid in catalog.feature_ids]
        matrix.append(doc.doc_id, vector.source, vector.word_count, row)
        if vector.flags:
            sidecar.append({
                "doc_id": doc.doc_id,
                "flags": list(vector.flags),
            })
    return matrix, sidecar
