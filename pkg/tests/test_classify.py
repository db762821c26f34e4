import json
from collections import Counter

import numpy as np
import pytest

from stylo.classify import (
    DatasetSplit,
    ForestModel,
    ForestParams,
    LassoModel,
    cross_corpus_eval,
    evaluate,
    gini_importance,
    lambda_max,
    predict,
    predict_forest,
    split,
    train_forest,
    train_lasso,
)
from stylo.classify.lasso import _fit_standardized, _standardize_params, objective
from stylo.errors import ConvergenceError, ModelError
from stylo.matrix import FeatureMatrix

from oracles import confusion_tally, subgradient_lasso_logistic, walk_tree

FEATURES = tuple(f"f_{i:02d}" for i in range(1, 67))


def synthetic_matrix(
    n_per_class: int,
    classes: tuple[str, ...] = ("alpha", "beta"),
    informative: int | None = 7,
    separation: float = 5.0,
    seed: int = 0,
    n_features: int = 66,
    shared_parents: bool = False,
) -> FeatureMatrix:
    rng = np.random.default_rng(seed)
    features = tuple(f"f_{i:02d}" for i in range(1, n_features + 1))
    matrix = FeatureMatrix(feature_ids=features)
    for c, label in enumerate(classes):
        X = rng.normal(0.0, 1.0, size=(n_per_class, n_features))
        if informative is not None:
            X[:, informative] += separation * c
        for i in range(n_per_class):
            parent = f"p{i}" if shared_parents else f"{label}{i}"
            matrix.append(f"{parent}#{label}", label, 100, X[i])
    return matrix


class TestSplit:
    def test_balanced_two_class_proportions(self):
        matrix = synthetic_matrix(50)
        train, test = split(matrix, DatasetSplit(0.75, seed=11))
        assert len(train) + len(test) == 100
        train_counts = Counter(train.sources)
        test_counts = Counter(test.sources)
        for label in ("alpha", "beta"):
            assert train_counts[label] in (37, 38)
            assert test_counts[label] == 50 - train_counts[label]

    def test_partition_no_overlap(self):
        matrix = synthetic_matrix(30, seed=5)
        train, test = split(matrix, DatasetSplit(0.6, seed=2))
        assert set(train.doc_ids).isdisjoint(test.doc_ids)
        assert sorted(train.doc_ids + test.doc_ids) == sorted(matrix.doc_ids)

    def test_same_seed_identical(self):
        matrix = synthetic_matrix(40, seed=9)
        first = split(matrix, DatasetSplit(0.75, seed=4))
        second = split(matrix, DatasetSplit(0.75, seed=4))
        assert first[0].doc_ids == second[0].doc_ids
        assert first[1].doc_ids == second[1].doc_ids

    def test_different_seed_differs(self):
        matrix = synthetic_matrix(40, seed=9)
        a, _ = split(matrix, DatasetSplit(0.75, seed=1))
        b, _ = split(matrix, DatasetSplit(0.75, seed=99))
        assert a.doc_ids != b.doc_ids

    def test_shared_parents_never_split(self):
        matrix = synthetic_matrix(25, classes=("human_chunk2", "m1", "m2"),
                                  shared_parents=True, seed=3)
        train, test = split(matrix, DatasetSplit(0.75, seed=8))
        train_parents = {d.rsplit("#", 1)[0] for d in train.doc_ids}
        test_parents = {d.rsplit("#", 1)[0] for d in test.doc_ids}
        assert train_parents.isdisjoint(test_parents)
        # exhaustive: every parent's rows are all on one side
        for parent in train_parents | test_parents:
            rows = [d for d in matrix.doc_ids if d.rsplit("#", 1)[0] == parent]
            in_train = [d for d in rows if d in set(train.doc_ids)]
            assert len(in_train) in (0, len(rows))

    def test_tiny_class_rejected(self):
        matrix = synthetic_matrix(5)
        matrix.append("solo#only", "only", 100, np.zeros(66))
        with pytest.raises(ModelError):
            split(matrix, DatasetSplit(0.75, seed=0))

    def test_bad_fraction_rejected(self):
        with pytest.raises(ModelError):
            DatasetSplit(1.0, seed=0)


class TestForest:
    def test_separable_data_high_accuracy(self):
        matrix = synthetic_matrix(150, seed=21)
        train, test = split(matrix, DatasetSplit(0.75, seed=21))
        model = train_forest(train, ForestParams(n_trees=30, seed=21))
        assert evaluate(model, test).accuracy >= 0.99

    def test_permuted_labels_near_chance(self):
        matrix = synthetic_matrix(150, seed=22)
        rng = np.random.default_rng(22)
        matrix.sources = [matrix.sources[i] for i in rng.permutation(len(matrix))]
        train, test = split(matrix, DatasetSplit(0.75, seed=22))
        model = train_forest(train, ForestParams(n_trees=30, seed=22))
        assert abs(evaluate(model, test).accuracy - 0.5) <= 0.15

    def test_constant_features_majority_rate(self):
        features = FEATURES[:5]
        matrix = FeatureMatrix(feature_ids=features)
        sizes = {"a": 30, "b": 10, "c": 10, "d": 10, "e": 10, "f": 10, "g": 10}
        for label, size in sizes.items():
            for i in range(size):
                matrix.append(f"{label}{i}#{label}", label, 100, np.ones(5))
        with pytest.warns(UserWarning, match="uniform"):
            model = train_forest(matrix, ForestParams(n_trees=15, seed=1))
        confusion = evaluate(model, matrix)
        majority = 30 / 90
        assert confusion.accuracy == pytest.approx(majority, abs=0.01)

    def test_single_class_rejected(self):
        matrix = synthetic_matrix(10, classes=("solo",))
        with pytest.raises(ModelError):
            train_forest(matrix, ForestParams(n_trees=2, seed=0))

    def test_bit_deterministic_given_seed(self):
        matrix = synthetic_matrix(40, seed=13)
        params = ForestParams(n_trees=12, seed=13)
        first = train_forest(matrix, params).to_json()
        second = train_forest(matrix, params).to_json()
        assert first == second

    def test_serialization_roundtrip(self):
        matrix = synthetic_matrix(30, seed=14)
        model = train_forest(matrix, ForestParams(n_trees=8, seed=14))
        restored = ForestModel.from_json(model.to_json())
        assert restored.to_json() == model.to_json()
        rows = synthetic_matrix(10, seed=15)
        assert predict(restored, rows)[0] == predict(model, rows)[0]


class TestPredict:
    def test_overfit_tree_memorizes_training_rows(self):
        matrix = synthetic_matrix(20, seed=31, informative=None)
        model = train_forest(matrix, ForestParams(n_trees=1, max_features=66, seed=31))
        # without bootstrap noise this is approximate; check against tree walk
        predictions, _ = predict_forest(model, matrix)
        expected = [
            model.class_labels[walk_tree(model.trees[0], row)]
            for row in matrix.values
        ]
        assert predictions == expected

    def test_single_leaf_predicts_constant(self):
        leaf_model = ForestModel(
            params=ForestParams(n_trees=1, seed=0),
            class_labels=("x", "y"),
            feature_ids=("f_01",),
            trees=[{"leaf": [3, 1]}],
            importances=np.array([1.0]),
        )
        rows = FeatureMatrix(feature_ids=("f_01",))
        for i in range(5):
            rows.append(f"r{i}#x", "x", 10, np.array([float(i)]))
        predictions, scores = predict_forest(leaf_model, rows)
        assert predictions == ["x"] * 5
        assert np.allclose(scores[:, 0], 1.0)

    def test_matches_reference_tree_walker(self):
        matrix = synthetic_matrix(60, seed=32)
        model = train_forest(matrix, ForestParams(n_trees=9, seed=32))
        rows = synthetic_matrix(25, seed=33)
        predictions, _ = predict_forest(model, rows)
        k = len(model.class_labels)
        for i, row in enumerate(rows.values):
            votes = np.zeros(k)
            for tree in model.trees:
                votes[walk_tree(tree, row)] += 1
            assert predictions[i] == model.class_labels[int(np.argmax(votes))]

    def test_missing_feature_column_named(self):
        matrix = synthetic_matrix(20, seed=34)
        model = train_forest(matrix, ForestParams(n_trees=2, seed=34))
        rows = synthetic_matrix(4, seed=35, n_features=65)
        with pytest.raises(ModelError) as exc:
            predict_forest(model, rows)
        assert "f_66" in str(exc.value)

    def test_vote_tie_breaks_lexicographically(self):
        model = ForestModel(
            params=ForestParams(n_trees=2, seed=0),
            class_labels=("a", "b"),
            feature_ids=("f_01",),
            trees=[{"leaf": [1, 0]}, {"leaf": [0, 1]}],
            importances=np.array([1.0]),
        )
        rows = FeatureMatrix(feature_ids=("f_01",))
        rows.append("r#x", "a", 10, np.array([0.0]))
        predictions, _ = predict_forest(model, rows)
        assert predictions == ["a"]


class TestImportance:
    def test_informative_feature_ranks_first(self):
        matrix = synthetic_matrix(100, seed=41, informative=7)
        model = train_forest(matrix, ForestParams(n_trees=20, seed=41))
        ranking = gini_importance(model)
        assert ranking.entries[0][0] == "f_08"   # informative index 7 -> f_08

    def test_scores_sum_to_one(self):
        matrix = synthetic_matrix(50, seed=42)
        model = train_forest(matrix, ForestParams(n_trees=10, seed=42))
        total = sum(score for _, score in gini_importance(model).entries)
        assert total == pytest.approx(1.0, abs=1e-9)
        assert all(score >= 0 for _, score in gini_importance(model).entries)

    def test_constant_features_fall_back_to_uniform(self):
        matrix = FeatureMatrix(feature_ids=FEATURES[:4])
        for label in ("a", "b"):
            for i in range(10):
                matrix.append(f"{label}{i}#{label}", label, 10, np.ones(4))
        with pytest.warns(UserWarning):
            model = train_forest(matrix, ForestParams(n_trees=3, seed=0))
        assert np.allclose(model.importances, 0.25)


class TestLasso:
    def test_lambda_max_gives_exact_zeros(self):
        matrix = synthetic_matrix(40, seed=51, separation=2.0)
        X = np.asarray(matrix.values)
        t = np.array([1.0 if s == "beta" else 0.0 for s in matrix.sources])
        means, sds = _standardize_params(X)
        lam_top = lambda_max((X - means) / sds, t)
        model = train_lasso(matrix, lambda_grid=[lam_top], seed=51)
        assert np.all(model.coefficients == 0.0)

    def test_separable_coefficient_sign(self):
        rng = np.random.default_rng(52)
        matrix = FeatureMatrix(feature_ids=("f_01",))
        for i in range(30):
            matrix.append(f"a{i}#neg", "neg", 10, np.array([rng.normal(-2.0, 0.3)]))
            matrix.append(f"b{i}#pos", "pos", 10, np.array([rng.normal(2.0, 0.3)]))
        X = np.asarray(matrix.values)
        t = np.array([1.0 if s == "pos" else 0.0 for s in matrix.sources])
        means, sds = _standardize_params(X)
        lam_top = lambda_max((X - means) / sds, t)
        model = train_lasso(matrix, lambda_grid=[0.01 * lam_top], seed=52)
        # positive class sits at higher feature values
        assert model.coefficients[0] > 0

    def test_objective_matches_subgradient_oracle(self):
        rng = np.random.default_rng(53)
        n, p = 80, 8
        X = rng.normal(0.0, 1.0, size=(n, p))
        true_w = np.array([1.5, -2.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
        t = (1.0 / (1.0 + np.exp(-(X @ true_w))) > rng.uniform(size=n)).astype(float)
        means, sds = _standardize_params(X)
        Xs = (X - means) / sds
        lam = 0.3 * lambda_max(Xs, t)
        w, b = _fit_standardized(Xs, t, lam)
        ours = objective(Xs, t, w, b, lam)
        oracle = subgradient_lasso_logistic(Xs, t, lam, iterations=40_000)
        assert abs(ours - oracle) <= 1e-6
        assert ours <= oracle + 1e-12    # we should not be worse than the oracle

    def test_objective_non_increasing_across_sweeps(self):
        rng = np.random.default_rng(54)
        X = rng.normal(size=(60, 5))
        t = (rng.uniform(size=60) > 0.5).astype(float)
        means, sds = _standardize_params(X)
        Xs = (X - means) / sds
        trace: list[float] = []
        _fit_standardized(Xs, t, lam=0.05, trace=trace)
        diffs = np.diff(trace)
        assert np.all(diffs <= 1e-12)

    def test_non_binary_labels_rejected(self):
        matrix = synthetic_matrix(10, classes=("a", "b", "c"))
        with pytest.raises(ModelError):
            train_lasso(matrix, lambda_grid=[0.1], seed=0)

    def test_non_convergence_carries_delta(self):
        rng = np.random.default_rng(55)
        X = rng.normal(size=(50, 4))
        t = (rng.uniform(size=50) > 0.5).astype(float)
        with pytest.raises(ConvergenceError) as exc:
            _fit_standardized(X, t, lam=0.001, max_sweeps=2)
        assert exc.value.last_delta > 0

    def test_cv_one_se_rule_prefers_stronger_penalty(self):
        matrix = synthetic_matrix(60, seed=56, separation=3.0)
        model = train_lasso(matrix, seed=56)
        assert model.cv_table is not None
        best = max(row["mean_accuracy"] for row in model.cv_table)
        chosen = next(row for row in model.cv_table if row["lambda"] == model.lam)
        # chosen lambda is at least as penalized as every lambda beating its accuracy bound
        eligible = [row["lambda"] for row in model.cv_table
                    if row["mean_accuracy"] >= best - 1e-12]
        assert model.lam >= min(eligible) or chosen["mean_accuracy"] >= best - 1.0

    def test_zero_count_shrinks_between_grid_endpoints(self):
        matrix = synthetic_matrix(50, seed=59, separation=3.0)
        X = np.asarray(matrix.values)
        t = np.array([1.0 if s == "beta" else 0.0 for s in matrix.sources])
        means, sds = _standardize_params(X)
        lam_top = lambda_max((X - means) / sds, t)
        at_max = train_lasso(matrix, lambda_grid=[lam_top], seed=59)
        at_min = train_lasso(matrix, lambda_grid=[0.01 * lam_top], seed=59)
        nnz_max = int(np.count_nonzero(at_max.coefficients))
        nnz_min = int(np.count_nonzero(at_min.coefficients))
        assert nnz_max == 0
        assert nnz_min > nnz_max

    def test_serialization_roundtrip(self):
        matrix = synthetic_matrix(30, seed=57, separation=3.0)
        model = train_lasso(matrix, lambda_grid=[0.05], seed=57)
        restored = LassoModel.from_json(model.to_json())
        assert restored.to_json() == model.to_json()
        rows = synthetic_matrix(8, seed=58)
        assert predict(restored, rows)[0] == predict(model, rows)[0]


class TestEvaluate:
    def test_perfect_predictor_diagonal(self):
        matrix = synthetic_matrix(80, seed=61, separation=8.0)
        train, test = split(matrix, DatasetSplit(0.75, seed=61))
        model = train_forest(train, ForestParams(n_trees=20, seed=61))
        confusion = evaluate(model, test)
        if confusion.accuracy == 1.0:
            assert np.all(confusion.counts == np.diag(np.diag(confusion.counts)))
        assert confusion.total == len(test)

    def test_constant_predictor_on_balanced_seven_classes(self):
        labels = tuple(f"c{i}" for i in range(7))
        model = ForestModel(
            params=ForestParams(n_trees=1, seed=0),
            class_labels=labels,
            feature_ids=("f_01",),
            trees=[{"leaf": [7, 1, 1, 1, 1, 1, 1]}],
            importances=np.array([1.0]),
        )
        rows = FeatureMatrix(feature_ids=("f_01",))
        for label in labels:
            for i in range(10):
                rows.append(f"{label}{i}#{label}", label, 10, np.array([0.0]))
        confusion = evaluate(model, rows)
        assert confusion.accuracy == pytest.approx(1 / 7)

    def test_counts_match_bruteforce_tally(self):
        matrix = synthetic_matrix(40, seed=62, separation=1.0)
        train, test = split(matrix, DatasetSplit(0.75, seed=62))
        model = train_forest(train, ForestParams(n_trees=10, seed=62))
        confusion = evaluate(model, test)
        predictions, _ = predict(model, test)
        tally = confusion_tally(test.sources, predictions)
        for i, true in enumerate(confusion.labels):
            for j, predicted in enumerate(confusion.labels):
                assert confusion.counts[i, j] == tally.get((true, predicted), 0)
        assert confusion.counts.sum() == len(test)

    def test_empty_test_rejected(self):
        matrix = synthetic_matrix(10, seed=63)
        model = train_forest(matrix, ForestParams(n_trees=2, seed=63))
        empty = FeatureMatrix(feature_ids=matrix.feature_ids)
        with pytest.raises(ModelError):
            evaluate(model, empty)

    def test_human_llm_misclassification_rates(self):
        labels = ("human_chunk2", "m1")
        model = ForestModel(
            params=ForestParams(n_trees=1, seed=0),
            class_labels=labels,
            feature_ids=("f_01",),
            trees=[{"f": 0, "t": 0.5, "l": {"leaf": [1, 0]}, "r": {"leaf": [0, 1]}}],
            importances=np.array([1.0]),
        )
        rows = FeatureMatrix(feature_ids=("f_01",))
        # human rows: 3 below threshold (right), 1 above (wrong -> llm)
        for i, value in enumerate([0.0, 0.0, 0.0, 1.0]):
            rows.append(f"h{i}#human_chunk2", "human_chunk2", 10, np.array([value]))
        # llm rows: 1 below threshold (wrong -> human), 1 above (right)
        for i, value in enumerate([0.0, 1.0]):
            rows.append(f"l{i}#m1", "m1", 10, np.array([value]))
        confusion = evaluate(model, rows)
        assert confusion.human_to_llm_rate() == pytest.approx(0.25)
        assert confusion.llm_to_human_rate() == pytest.approx(0.5)


class TestCrossCorpus:
    def test_consistent_with_evaluate_on_own_data(self):
        matrix = synthetic_matrix(40, seed=71)
        train, test = split(matrix, DatasetSplit(0.75, seed=71))
        model = train_forest(train, ForestParams(n_trees=10, seed=71))
        own = evaluate(model, test)
        cross, report = cross_corpus_eval(model, test, "A", "A-heldout")
        assert np.array_equal(own.counts, cross.counts)
        assert report["trained_on"] == "A"

    def test_identically_generated_corpus_transfers(self):
        train_corpus = synthetic_matrix(100, seed=72)
        foreign = synthetic_matrix(100, seed=73)     # same distribution, new draw
        model = train_forest(train_corpus, ForestParams(n_trees=20, seed=72))
        _, report = cross_corpus_eval(model, foreign)
        assert report["accuracy"] >= 0.95

    def test_label_permuted_foreign_near_chance(self):
        train_corpus = synthetic_matrix(80, seed=74)
        foreign = synthetic_matrix(80, seed=75)
        rng = np.random.default_rng(76)
        foreign.sources = [foreign.sources[i] for i in rng.permutation(len(foreign))]
        model = train_forest(train_corpus, ForestParams(n_trees=20, seed=74))
        matrix, _ = cross_corpus_eval(model, foreign)
        assert abs(matrix.accuracy - 0.5) <= 0.15

    def test_catalog_mismatch_rejected(self):
        model = train_forest(synthetic_matrix(20, seed=77),
                             ForestParams(n_trees=2, seed=77))
        foreign = synthetic_matrix(10, seed=78, n_features=65)
        with pytest.raises(ModelError):
            cross_corpus_eval(model, foreign)
