import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stylo.errors import AlignmentError, ZeroVarianceError
from stylo.matrix import FeatureMatrix
from stylo.stats import (
    bonferroni,
    cohen_d_paired,
    compare_features,
    compare_vocab,
    rank_comparisons,
    wilcoxon_signed_rank,
    word_rates,
)

from oracles import cohen_d_direct, lemma_rates_bruteforce, wilcoxon_enumeration_p
from util import make_doc_from_lemmas


def pairs_from_diffs(diffs):
    return [(0.0, float(d)) for d in diffs]


class TestWilcoxon:
    def test_example_against_enumeration(self):
        pairs = pairs_from_diffs([1, 2, 3, -1, 2, 4])
        result = wilcoxon_signed_rank(pairs)
        assert result.method == "exact"
        assert result.p == wilcoxon_enumeration_p(pairs)

    def test_all_zero_differences(self):
        pairs = [(3.0, 3.0), (1.5, 1.5), (-2.0, -2.0)]
        result = wilcoxon_signed_rank(pairs)
        assert result.all_zero
        assert result.p == 1.0
        assert result.w_plus is None and result.w_minus is None

    def test_sign_symmetry(self):
        diffs = [0.3, -1.2, 2.2, 5.0, -0.7, 0.9, 1.1]
        p_pos = wilcoxon_signed_rank(pairs_from_diffs(diffs)).p
        p_neg = wilcoxon_signed_rank(pairs_from_diffs([-d for d in diffs])).p
        assert p_pos == p_neg

    @given(st.lists(st.integers(min_value=-6, max_value=6), min_size=1, max_size=10))
    @settings(max_examples=200, deadline=None)
    def test_sign_symmetry_property(self, diffs):
        p_pos = wilcoxon_signed_rank(pairs_from_diffs(diffs)).p
        p_neg = wilcoxon_signed_rank(pairs_from_diffs([-d for d in diffs])).p
        assert p_pos == p_neg

    def test_rank_sum_identity(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            diffs = rng.integers(-5, 6, size=rng.integers(1, 15))
            result = wilcoxon_signed_rank(pairs_from_diffs(diffs))
            if result.all_zero:
                continue
            n = result.n_effective
            assert result.w_plus + result.w_minus == pytest.approx(n * (n + 1) / 2)

    def test_matches_enumeration_on_random_instances(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            n = int(rng.integers(1, 11))
            diffs = rng.integers(-4, 5, size=n).astype(float)
            pairs = pairs_from_diffs(diffs)
            assert wilcoxon_signed_rank(pairs).p == pytest.approx(
                wilcoxon_enumeration_p(pairs), abs=1e-12)

    def test_ties_get_average_ranks(self):
        # |diffs| = 2,2 -> both ranks 1.5; W+ must be a half-integer sum
        result = wilcoxon_signed_rank(pairs_from_diffs([2, -2, 3]))
        assert result.w_plus + result.w_minus == 6.0

    def test_approx_branch_close_to_enumeration(self):
        rng = np.random.default_rng(3)
        diffs = rng.normal(0.4, 1.0, size=20)
        pairs = pairs_from_diffs(diffs)
        p_exact = wilcoxon_enumeration_p(pairs)
        p_approx = wilcoxon_signed_rank(pairs, method="approx").p
        assert abs(p_approx - p_exact) <= 0.01

    def test_auto_switches_to_approx_past_25(self):
        diffs = list(range(1, 31))
        assert wilcoxon_signed_rank(pairs_from_diffs(diffs)).method == "approx"
        assert wilcoxon_signed_rank(pairs_from_diffs(diffs[:20])).method == "exact"

    def test_needs_at_least_one_pair(self):
        with pytest.raises(ValueError):
            wilcoxon_signed_rank([])


class TestBonferroni:
    def test_paper_scale_example(self):
        assert bonferroni(0.0005, 66) == 0.033

    def test_clamps_at_one(self):
        assert bonferroni(0.5, 66) == 1.0

    def test_identity_with_one_test(self):
        for p in (0.001, 0.2, 1.0):
            assert bonferroni(p, 1) == p

    @given(st.floats(min_value=1e-12, max_value=1.0),
           st.floats(min_value=1e-12, max_value=1.0),
           st.integers(min_value=1, max_value=500))
    def test_monotone_and_clamped(self, p1, p2, m):
        lo, hi = sorted((p1, p2))
        assert bonferroni(lo, m) <= bonferroni(hi, m) <= 1.0

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            bonferroni(0.0, 10)
        with pytest.raises(ValueError):
            bonferroni(1.5, 10)
        with pytest.raises(ValueError):
            bonferroni(0.5, 0)


class TestCohenD:
    def test_symmetric_differences_give_zero(self):
        assert cohen_d_paired(pairs_from_diffs([1, -1])) == 0.0

    def test_direct_formula_oracle(self):
        pairs = pairs_from_diffs([2, 4, 4, 6])
        assert cohen_d_paired(pairs) == pytest.approx(cohen_d_direct(pairs), abs=1e-12)

    def test_positive_scaling_invariance(self):
        base = [1.0, 2.5, -0.5, 4.0]
        d1 = cohen_d_paired(pairs_from_diffs(base))
        d2 = cohen_d_paired(pairs_from_diffs([3.0 * x for x in base]))
        assert d1 == pytest.approx(d2, abs=1e-12)

    def test_negative_scaling_flips_sign(self):
        base = [1.0, 2.5, -0.5, 4.0]
        d1 = cohen_d_paired(pairs_from_diffs(base))
        d2 = cohen_d_paired(pairs_from_diffs([-2.0 * x for x in base]))
        assert d2 == pytest.approx(-d1, abs=1e-12)

    @given(st.lists(st.integers(min_value=-50, max_value=50), min_size=2, max_size=12),
           st.integers(min_value=-100, max_value=100))
    @settings(max_examples=200)
    def test_additive_shift_invariance(self, diffs, shift):
        if len(set(diffs)) < 2:
            return
        base = [(float(h), float(h + d)) for h, d in enumerate(diffs)]
        shifted = [(h + shift, l + shift) for h, l in base]
        assert cohen_d_paired(base) == pytest.approx(cohen_d_paired(shifted), abs=1e-9)

    def test_zero_variance_is_error(self):
        with pytest.raises(ZeroVarianceError):
            cohen_d_paired(pairs_from_diffs([2, 2, 2]))

    def test_needs_two_pairs(self):
        with pytest.raises(ValueError):
            cohen_d_paired([(0.0, 1.0)])


def small_matrix(values: np.ndarray, suffix: str, features=("f_01", "f_02", "f_03")):
    matrix = FeatureMatrix(feature_ids=tuple(features))
    for i, row in enumerate(values):
        matrix.append(f"d{i}#{suffix}", suffix, 100, np.asarray(row, dtype=float))
    return matrix


class TestCompareFeatures:
    def test_identical_matrices(self):
        rng = np.random.default_rng(0)
        values = rng.uniform(1.0, 10.0, size=(8, 3))
        human = small_matrix(values, "chunk2")
        llm = small_matrix(values, "llm")
        results = compare_features(human, llm)
        for r in results:
            assert r.ratio == pytest.approx(1.0)
            assert r.p_raw == 1.0 and r.p_adjusted == 1.0
            assert r.cohen_d is None          # zero-variance differences
            assert not r.significant

    def test_single_doubled_feature(self):
        rng = np.random.default_rng(1)
        values = rng.uniform(1.0, 10.0, size=(6, 3))
        doubled = values.copy()
        doubled[:, 1] *= 2.0
        results = compare_features(small_matrix(values, "chunk2"),
                                   small_matrix(doubled, "llm"))
        assert results[0].ratio == pytest.approx(1.0)
        assert results[1].ratio == pytest.approx(2.0)
        assert results[2].ratio == pytest.approx(1.0)

    def test_known_location_shift_recovers_d(self):
        rng = np.random.default_rng(2)
        n = 400
        shift_in_sd = 0.8
        sd = 1.7
        human_col = rng.uniform(20.0, 30.0, size=n)
        diffs = rng.normal(shift_in_sd * sd, sd, size=n)
        human = small_matrix(np.column_stack([human_col] * 3), "chunk2")
        llm = small_matrix(np.column_stack([human_col + diffs] * 3), "llm")
        results = compare_features(human, llm)
        assert results[0].cohen_d == pytest.approx(shift_in_sd, abs=0.1)

    def test_bonferroni_uses_feature_count(self):
        rng = np.random.default_rng(3)
        values = rng.uniform(1.0, 10.0, size=(10, 3))
        shifted = values + rng.normal(2.0, 0.2, size=values.shape)
        results = compare_features(small_matrix(values, "chunk2"),
                                   small_matrix(shifted, "llm"))
        for r in results:
            assert r.p_adjusted == pytest.approx(min(1.0, 3 * r.p_raw))

    def test_misaligned_ids_raise_with_mismatches(self):
        human = small_matrix(np.ones((3, 3)), "chunk2")
        llm = small_matrix(np.ones((3, 3)), "llm")
        llm.doc_ids[2] = "other#llm"
        with pytest.raises(AlignmentError) as exc:
            compare_features(human, llm)
        assert "d2" in exc.value.mismatches and "other" in exc.value.mismatches

    def test_rank_by_abs_log_ratio(self):
        rng = np.random.default_rng(4)
        values = rng.uniform(5.0, 6.0, size=(5, 3))
        scaled = values.copy()
        scaled[:, 0] *= 3.0     # strongest deviation
        scaled[:, 2] *= 0.25    # even stronger on the log scale
        results = compare_features(small_matrix(values, "chunk2"),
                                   small_matrix(scaled, "llm"))
        ranked = rank_comparisons(results)
        assert ranked[0].feature_id == "f_03"
        assert ranked[1].feature_id == "f_01"

    def test_rank_by_supplied_importance(self):
        rng = np.random.default_rng(5)
        values = rng.uniform(5.0, 6.0, size=(5, 3))
        results = compare_features(small_matrix(values, "chunk2"),
                                   small_matrix(values + 0.1, "llm"))
        ranked = rank_comparisons(results, ["f_02", "f_03", "f_01"])
        assert [r.feature_id for r in ranked] == ["f_02", "f_03", "f_01"]


class TestWordRates:
    def test_lemmatized_grouping(self):
        doc = make_doc_from_lemmas("d", ["run", "run", "run", "run"])
        rates = word_rates([doc])
        assert rates["run"] == (1000.0, 1.0)

    def test_per_million_arithmetic(self):
        # 5 occurrences in 4,000,000 words = 1.25 per million
        rate = 5 / 4_000_000 * 1000.0
        assert rate == pytest.approx(0.00125)

    def test_fixture_matches_bruteforce(self, gold_docs):
        rates = word_rates(list(gold_docs))
        lemma_lists = [
            [t.lemma for t in doc.tokens() if not t.is_punct] for doc in gold_docs
        ]
        expected = lemma_rates_bruteforce(lemma_lists)
        assert set(rates) == set(expected)
        for lemma, (rate, fraction) in expected.items():
            assert rates[lemma][0] == pytest.approx(rate, abs=1e-12)
            assert rates[lemma][1] == pytest.approx(fraction, abs=1e-12)

    def test_punctuation_excluded(self, gold_docs):
        rates = word_rates(list(gold_docs))
        assert "." not in rates and "," not in rates

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            word_rates([])


class TestCompareVocab:
    def test_identical_rates_give_unit_ratios(self):
        rates = {"alpha": (5.0, 0.9), "beta": (0.5, 0.4)}
        rows = compare_vocab(rates, dict(rates))
        assert all(r.ratio == pytest.approx(1.0) for r in rows)

    def test_planted_overuse_ratio(self):
        human = {"camaraderie": (0.2, 0.1), "filler": (10.0, 1.0)}
        llm = {"camaraderie": (32.4, 0.23), "filler": (10.0, 1.0)}
        rows = compare_vocab(human, llm)
        top = rows[0]
        assert top.lemma == "camaraderie"
        assert top.ratio == pytest.approx(162.0, abs=1e-9)
        assert top.llm_doc_fraction == 0.23

    def test_threshold_excludes_rare_lemmas(self):
        human = {"rare": (0.0005, 0.01), "common": (2.0, 0.8)}
        rows = compare_vocab(human, {"rare": (1.0, 0.5), "common": (2.0, 0.8)})
        assert [r.lemma for r in rows] == ["common"]
        # at exactly the floor the lemma is still excluded (strict >)
        rows = compare_vocab({"edge": (0.001, 0.1)}, {"edge": (1.0, 0.1)})
        assert rows == []

    def test_swap_inverts_ratios(self):
        rng = np.random.default_rng(6)
        lemmas = [f"w{i}" for i in range(30)]
        human = {w: (float(rng.uniform(0.01, 5.0)), 0.5) for w in lemmas}
        llm = {w: (float(rng.uniform(0.01, 5.0)), 0.5) for w in lemmas}
        forward = {r.lemma: r.ratio for r in compare_vocab(human, llm, 0.0)}
        backward = {r.lemma: r.ratio for r in compare_vocab(llm, human, 0.0)}
        for lemma in lemmas:
            assert forward[lemma] == pytest.approx(1.0 / backward[lemma], rel=1e-12)

    def test_sorted_by_descending_ratio(self):
        human = {w: (1.0, 0.5) for w in "abcde"}
        llm = {w: (float(i), 0.5) for i, w in enumerate("abcde", start=1)}
        rows = compare_vocab(human, llm)
        ratios = [r.ratio for r in rows]
        assert ratios == sorted(ratios, reverse=True)

    def test_absent_lemma_gets_zero_rate(self):
        rows = compare_vocab({"gone": (1.0, 0.5)}, {})
        assert rows[0].llm_rate == 0.0 and rows[0].ratio == 0.0
