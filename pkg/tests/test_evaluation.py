import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenefusion.evaluation import (
    FoldPlan,
    HoldoutResult,
    MlpClassifier,
    confusion_matrix,
    evaluate,
    holdout_evaluate,
    kfold_split,
    stratified_kfold_split,
)
from scenefusion.network import TrainConfig


class OraclePredictor:
    """Reads the true label back out of the feature column."""

    def fit(self, X, y):
        return self

    def predict(self, X):
        return np.asarray(X[:, 0], dtype=int)


class ConstantPredictor:
    def __init__(self, value):
        self.value = value

    def fit(self, X, y):
        return self

    def predict(self, X):
        return np.full(len(X), self.value, dtype=int)


class LookupPredictor:
    """Predetermined prediction per sample id carried in the feature column."""

    def __init__(self, table):
        self.table = table

    def fit(self, X, y):
        return self

    def predict(self, X):
        return np.array([self.table[int(i)] for i in X[:, 0]])


class TestKfoldSplit:
    def test_100_by_10_exact(self):
        plan = kfold_split(100, 10, seed=0)
        sizes = np.bincount(plan.assignments, minlength=10)
        np.testing.assert_array_equal(sizes, np.full(10, 10))
        assert sorted(np.arange(100)) == sorted(range(100))

    def test_101_by_10_pigeonhole(self):
        plan = kfold_split(101, 10, seed=1)
        sizes = sorted(np.bincount(plan.assignments, minlength=10))
        assert sizes == [10] * 9 + [11]

    def test_same_seed_identical(self):
        a = kfold_split(57, 7, seed=9)
        b = kfold_split(57, 7, seed=9)
        np.testing.assert_array_equal(a.assignments, b.assignments)

    def test_different_seed_differs(self):
        a = kfold_split(100, 10, seed=0)
        b = kfold_split(100, 10, seed=1)
        assert not np.array_equal(a.assignments, b.assignments)

    def test_too_few_samples_rejected(self):
        with pytest.raises(ValueError):
            kfold_split(5, 10)

    def test_k_below_two_rejected(self):
        with pytest.raises(ValueError):
            kfold_split(10, 1)

    @given(
        n=st.integers(min_value=2, max_value=300),
        k=st.integers(min_value=2, max_value=20),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    @settings(max_examples=200, deadline=None)
    def test_partition_and_balance_properties(self, n, k, seed):
        if n < k:
            with pytest.raises(ValueError):
                kfold_split(n, k, seed)
            return
        plan = kfold_split(n, k, seed)
        assert len(plan.assignments) == n
        assert set(plan.assignments) == set(range(k))
        sizes = np.bincount(plan.assignments, minlength=k)
        assert sizes.max() - sizes.min() <= 1
        for fold in range(k):
            train_idx, test_idx = plan.train_test_indices(fold)
            assert len(set(train_idx) & set(test_idx)) == 0
            assert len(train_idx) + len(test_idx) == n

    def test_stratified_keeps_class_balance(self):
        labels = np.repeat([0, 1, 2], 30)
        plan = stratified_kfold_split(labels, 3, seed=0)
        for fold in range(3):
            _, test_idx = plan.train_test_indices(fold)
            counts = np.bincount(labels[test_idx], minlength=3)
            np.testing.assert_array_equal(counts, [10, 10, 10])


class TestConfusionMatrix:
    def test_hand_tallied_counts(self):
        y_true = [0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]
        y_pred = [0, 0, 1, 2, 1, 1, 0, 1, 2, 2, 2, 0]
        got = confusion_matrix(y_true, y_pred, 3)
        np.testing.assert_array_equal(got, [[2, 1, 1], [1, 3, 0], [1, 0, 3]])
        assert got.sum() == 12

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            confusion_matrix([0, 3], [0, 0], 3)


class TestEvaluate:
    def test_oracle_predictor_is_perfect(self):
        y = np.repeat(np.arange(3), 10)
        X = y[:, None].astype(float)
        plan = kfold_split(30, 5, seed=0)
        report = evaluate(lambda fold: OraclePredictor(), X, y, plan)
        assert report.mean_accuracy == 1.0
        assert np.all(report.fold_accuracies == np.ones(5))
        np.testing.assert_array_equal(report.confusion, np.diag([10, 10, 10]))

    def test_constant_predictor_on_balanced_classes(self):
        y = np.repeat(np.arange(4), 8)
        X = np.zeros((32, 1))
        plan = kfold_split(32, 4, seed=1)
        report = evaluate(lambda fold: ConstantPredictor(2), X, y, plan)
        assert abs(report.mean_accuracy - 0.25) < 1e-12
        assert report.confusion.sum() == 32

    def test_pooled_confusion_matches_hand_tally(self):
        y_true = np.array([0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2])
        preds = [0, 0, 1, 2, 1, 1, 0, 1, 2, 2, 2, 0]
        X = np.arange(12, dtype=float)[:, None]
        plan = kfold_split(12, 3, seed=2)
        report = evaluate(
            lambda fold: LookupPredictor(dict(enumerate(preds))), X, y_true, plan
        )
        np.testing.assert_array_equal(report.confusion, [[2, 1, 1], [1, 3, 0], [1, 0, 3]])
        assert np.trace(report.confusion) == 8

    def test_mean_between_min_and_max_fold_accuracy(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(60, 2))
        X[:30] += 3.0
        y = np.repeat([0, 1], 30)
        plan = kfold_split(60, 5, seed=3)
        report = evaluate(
            lambda fold: MlpClassifier([4], 2, TrainConfig(epochs=10), seed=fold),
            X,
            y,
            plan,
        )
        assert min(report.fold_accuracies) <= report.mean_accuracy <= max(report.fold_accuracies)
        assert report.confusion.sum() == 60

    def test_size_mismatch_rejected(self):
        plan = kfold_split(10, 2, seed=0)
        with pytest.raises(ValueError):
            evaluate(lambda fold: OraclePredictor(), np.zeros((12, 1)), np.zeros(12, dtype=int), plan)


class TestHoldoutEvaluate:
    def test_empty_holdout_rejected(self):
        with pytest.raises(ValueError):
            holdout_evaluate(
                {"m": ConstantPredictor(0)},
                np.zeros((0, 1)),
                np.zeros(0, dtype=int),
                train_sources=["a"],
                unseen_sources=["b"],
                num_classes=2,
            )

    def test_source_overlap_rejected(self):
        with pytest.raises(ValueError, match="vid1"):
            holdout_evaluate(
                {"m": ConstantPredictor(0)},
                np.zeros((4, 1)),
                np.zeros(4, dtype=int),
                train_sources=["vid1", "vid2"],
                unseen_sources=["vid1", "vid3"],
                num_classes=2,
            )

    def test_accuracy_equals_trace_over_total(self):
        y = np.array([0, 0, 1, 1, 2, 2])
        X = y[:, None].astype(float)
        results = holdout_evaluate(
            {"oracle": OraclePredictor(), "constant": ConstantPredictor(1)},
            X,
            y,
            train_sources=["train_vid"],
            unseen_sources=["unseen_vid"],
            num_classes=3,
        )
        for res in results.values():
            assert res.accuracy == np.trace(res.confusion) / res.confusion.sum()
        assert results["oracle"].correct == 6
        assert results["constant"].correct == 2

    def test_never_trains(self):
        class NoFit:
            def predict(self, X):
                return np.zeros(len(X), dtype=int)

        y = np.zeros(3, dtype=int)
        results = holdout_evaluate(
            {"m": NoFit()},
            np.zeros((3, 1)),
            y,
            train_sources=[],
            unseen_sources=["v"],
            num_classes=1,
        )
        assert results["m"].total == 3
