"""Paired human-vs-LLM feature statistics and lemma-level vocabulary rates.

The signed-rank test drops zero differences, assigns average ranks to ties,
and is exact (full sign-assignment distribution) up to n = 25 effective
pairs, switching to a tie-corrected normal approximation with continuity
correction beyond that.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .corpus_io import AnnotatedDocument, parent_doc_id
from .errors import AlignmentError, ZeroVarianceError
from .matrix import FeatureMatrix

EXACT_LIMIT = 25
ALPHA = 0.05


@dataclass(frozen=True, slots=True)
class WilcoxonResult:
    w_plus: float | None
    w_minus: float | None
    n_effective: int
    p: float
    method: str                 # "exact" | "approx" | "all_zero"

    @property
    def all_zero(self) -> bool:
        return self.method == "all_zero"


@dataclass(frozen=True, slots=True)
class PairedSample:
    feature_id: str
    pairs: tuple[tuple[float, float], ...]   # (human_value, llm_value)


@dataclass(frozen=True, slots=True)
class ComparisonResult:
    feature_id: str
    short_name: str
    human_mean_rate: float
    llm_mean_rate: float
    ratio: float | None         # None when either mean is 0 (undefined)
    p_raw: float
    p_adjusted: float
    cohen_d: float | None       # None when differences have zero variance
    n_pairs: int
    significant: bool


@dataclass(frozen=True, slots=True)
class WordComparisonRow:
    lemma: str
    human_rate: float           # per 1,000 words
    llm_rate: float
    ratio: float
    llm_doc_fraction: float


def _average_ranks(magnitudes: list[float]) -> list[float]:
    """Ranks of |d| with tied values sharing the average rank."""
    order = sorted(range(len(magnitudes)), key=lambda i: magnitudes[i])
    ranks = [0.0] * len(magnitudes)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and magnitudes[order[j + 1]] == magnitudes[order[i]]:
            j += 1
        average = (i + j + 2) / 2.0     # ranks are 1-based
        for k in range(i, j + 1):
            ranks[order[k]] = average
        i = j + 1
    return ranks


def _exact_two_sided_p(ranks: list[float], w_plus: float) -> float:
    """P(min(W+, W-) <= observed min) over all sign assignments.

    The distribution is built by dynamic programming on ranks doubled to
    integers (average ranks are half-integers), which is exactly equivalent
    to enumerating all 2^n assignments.
    """
    scaled = [int(round(2 * r)) for r in ranks]
    total = sum(scaled)
    ways = [0] * (total + 1)
    ways[0] = 1
    for value in scaled:
        for s in range(total, value - 1, -1):
            if ways[s - value]:
                ways[s] += ways[s - value]
    w2 = int(round(2 * w_plus))
    m = min(w2, total - w2)
    count = sum(ways[: m + 1]) + sum(ways[total - m:])
    return min(1.0, count / (1 << len(ranks)))


def _normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _approx_two_sided_p(ranks: list[float], w_plus: float) -> float:
    """Normal approximation with tie-corrected variance and continuity correction."""
    n = len(ranks)
    mean = n * (n + 1) / 4.0
    variance = n * (n + 1) * (2 * n + 1) / 24.0
    # subtract the standard adjustment per group of tied magnitudes
    counts: dict[float, int] = {}
    for r in ranks:
        counts[r] = counts.get(r, 0) + 1
    for t in counts.values():
        if t > 1:
            variance -= (t ** 3 - t) / 48.0
    if variance <= 0:
        return 1.0
    delta = w_plus - mean
    if delta > 0:
        delta -= 0.5
    elif delta < 0:
        delta += 0.5
    z = delta / math.sqrt(variance)
    p = 2.0 * (1.0 - _normal_cdf(abs(z)))
    return min(1.0, max(p, math.ulp(0.0)))


def wilcoxon_signed_rank(
    pairs: list[tuple[float, float]],
    method: str = "auto",
) -> WilcoxonResult:
    """Two-sided paired signed-rank test on (first, second) pairs.

    Differences are second - first. All-zero differences are an outcome
    (p = 1, undefined statistic), not an error.
    """
    if not pairs:
        raise ValueError("need at least one pair")
    if method not in ("auto", "exact", "approx"):
        raise ValueError(f"unknown method {method!r}")
    diffs = [b - a for a, b in pairs]
    nonzero = [d for d in diffs if d != 0.0]
    if not nonzero:
        return WilcoxonResult(None, None, 0, 1.0, "all_zero")
    ranks = _average_ranks([abs(d) for d in nonzero])
    w_plus = sum(r for r, d in zip(ranks, nonzero) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, nonzero) if d < 0)
    n = len(nonzero)
    if method == "exact" or (method == "auto" and n <= EXACT_LIMIT):
        p = _exact_two_sided_p(ranks, w_plus)
        used = "exact"
    else:
        p = _approx_two_sided_p(ranks, w_plus)
        used = "approx"
    return WilcoxonResult(w_plus, w_minus, n, p, used)


def bonferroni(p_raw: float, m: int) -> float:
    """Multiple-comparison adjustment: min(1, m * p)."""
    if not 0.0 < p_raw <= 1.0:
        raise ValueError(f"p_raw must be in (0, 1], got {p_raw}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return min(1.0, m * p_raw)


def cohen_d_paired(pairs: list[tuple[float, float]]) -> float:
    """Paired effect size: mean(second - first) / sd(second - first), ddof=1."""
    if len(pairs) < 2:
        raise ValueError("need at least two pairs")
    diffs = [b - a for a, b in pairs]
    mean = sum(diffs) / len(diffs)
    ss = sum((d - mean) ** 2 for d in diffs)
    if ss == 0.0:
        raise ZeroVarianceError("paired differences have zero variance")
    sd = math.sqrt(ss / (len(diffs) - 1))
    return mean / sd


def _align_by_parent(human: FeatureMatrix, llm: FeatureMatrix) -> tuple[list[int], list[int]]:
    human_parents = {parent_doc_id(d): i for i, d in enumerate(human.doc_ids)}
    llm_parents = {parent_doc_id(d): i for i, d in enumerate(llm.doc_ids)}
    if len(human_parents) != len(human.doc_ids):
        raise AlignmentError("duplicate parent ids in human matrix", [])
    if len(llm_parents) != len(llm.doc_ids):
        raise AlignmentError("duplicate parent ids in llm matrix", [])
    missing = sorted(set(human_parents) ^ set(llm_parents))
    if missing:
        raise AlignmentError(
            f"{len(missing)} parent ids not shared between matrices", missing
        )
    shared = sorted(human_parents)
    return [human_parents[p] for p in shared], [llm_parents[p] for p in shared]


def compare_features(
    human: FeatureMatrix,
    llm: FeatureMatrix,
    short_names: dict[str, str] | None = None,
    n_tests: int | None = None,
) -> list[ComparisonResult]:
    """Per-feature paired comparison of two matrices aligned by parent doc id."""
    if human.feature_ids != llm.feature_ids:
        raise AlignmentError(
            "matrices carry different feature catalogs",
            sorted(set(human.feature_ids) ^ set(llm.feature_ids)),
        )
    human_rows, llm_rows = _align_by_parent(human, llm)
    m = n_tests if n_tests is not None else len(human.feature_ids)
    names = short_names or {}
    results = []
    for j, feature_id in enumerate(human.feature_ids):
        h = human.values[human_rows, j]
        l = llm.values[llm_rows, j]
        keep = ~(np.isnan(h) | np.isnan(l))
        h, l = h[keep], l[keep]
        if h.size == 0:
            raise AlignmentError(f"feature {feature_id} has no usable pairs", [])
        pairs = list(zip(h.tolist(), l.tolist()))
        test = wilcoxon_signed_rank(pairs)
        p_adj = bonferroni(test.p, m)
        try:
            d = cohen_d_paired(pairs) if len(pairs) >= 2 else None
        except ZeroVarianceError:
            d = None
        human_mean = float(np.mean(h))
        llm_mean = float(np.mean(l))
        ratio = llm_mean / human_mean if human_mean > 0 and llm_mean > 0 else None
        results.append(ComparisonResult(
            feature_id=feature_id,
            short_name=names.get(feature_id, feature_id),
            human_mean_rate=human_mean,
            llm_mean_rate=llm_mean,
            ratio=ratio,
            p_raw=test.p,
            p_adjusted=p_adj,
            cohen_d=d,
            n_pairs=len(pairs),
            significant=p_adj < ALPHA,
        ))
    return results


def rank_comparisons(
    results: list[ComparisonResult],
    importance_order: list[str] | None = None,
) -> list[ComparisonResult]:
    """Order comparison rows by a feature-importance ranking.

    Without a ranking, fall back to |log ratio| descending; undefined ratios
    sort last.
    """
    if importance_order:
        position = {fid: i for i, fid in enumerate(importance_order)}
        return sorted(results, key=lambda r: position.get(r.feature_id, len(position)))

    def magnitude(r: ComparisonResult) -> float:
        if r.ratio is None or r.ratio <= 0:
            return -1.0
        return abs(math.log(r.ratio))

    return sorted(results, key=magnitude, reverse=True)


def word_rates(docs: list[AnnotatedDocument]) -> dict[str, tuple[float, float]]:
    """Corpus-level lemma rates: lemma -> (per 1,000 words, doc fraction)."""
    if not docs:
        raise ValueError("need a nonempty corpus")
    totals: dict[str, int] = {}
    doc_hits: dict[str, int] = {}
    total_words = 0
    for doc in docs:
        seen: set[str] = set()
        for token in doc.tokens():
            if token.is_punct:
                continue
            total_words += 1
            totals[token.lemma] = totals.get(token.lemma, 0) + 1
            seen.add(token.lemma)
        for lemma in seen:
            doc_hits[lemma] = doc_hits.get(lemma, 0) + 1
    n_docs = len(docs)
    return {
        lemma: (count / total_words * 1000.0, doc_hits[lemma] / n_docs)
        for lemma, count in totals.items()
    }


def compare_vocab(
    human: dict[str, tuple[float, float]],
    llm: dict[str, tuple[float, float]],
    min_human_rate: float = 0.001,
) -> list[WordComparisonRow]:
    """Lemma over/underuse rows, sorted by descending rate ratio.

    Only lemmas above the human-rate floor (default 1 per million words,
    i.e. 0.001 per 1,000) are reported.
    """
    rows = []
    for lemma, (human_rate, _) in human.items():
        if human_rate <= min_human_rate:
            continue
        llm_rate, llm_fraction = llm.get(lemma, (0.0, 0.0))
        rows.append(WordComparisonRow(
            lemma=lemma,
            human_rate=human_rate,
            llm_rate=llm_rate,
            ratio=llm_rate / human_rate,
            llm_doc_fraction=llm_fraction,
        ))
    rows.sort(key=lambda r: (-r.ratio, r.lemma))
    return rows


def comparison_to_csv(results: list[ComparisonResult], metadata: dict[str, str] | None = None) -> str:
    buffer = io.StringIO()
    for key, value in (metadata or {}).items():
        buffer.write(f"# {key} = {value}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([
        "feature", "short_name", "human_rate", "llm_rate", "ratio",
        "p_raw", "p_adj", "d", "n", "significant",
    ])
    for r in results:
        writer.writerow([
            r.feature_id, r.short_name,
            repr(r.human_mean_rate), repr(r.llm_mean_rate),
            "" if r.ratio is None else repr(r.ratio),
            repr(r.p_raw), repr(r.p_adjusted),
            "" if r.cohen_d is None else repr(r.cohen_d),
            r.n_pairs, str(r.significant).lower(),
        ])
    return buffer.getvalue()


def comparison_to_dict(results: list[ComparisonResult]) -> list[dict]:
    return [
        {
            "feature": r.feature_id,
            "short_name": r.short_name,
            "human_rate": r.human_mean_rate,
            "llm_rate": r.llm_mean_rate,
            "ratio": r.ratio,
            "p_raw": r.p_raw,
            "p_adj": r.p_adjusted,
            "d": r.cohen_d,
            "n": r.n_pairs,
            "significant": r.significant,
        }
        for r in results
    ]


def vocab_to_csv(rows: list[WordComparisonRow], metadata: dict[str, str] | None = None) -> str:
    buffer = io.StringIO()
    for key, value in (metadata or {}).items():
        buffer.write(f"# {key} = {value}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["lemma", "human_rate", "llm_rate", "ratio", "llm_doc_fraction"])
    for r in rows:
        writer.writerow([
            r.lemma, repr(r.human_rate), repr(r.llm_rate),
            repr(r.ratio), repr(r.llm_doc_fraction),
        ])
    return buffer.getvalue()
