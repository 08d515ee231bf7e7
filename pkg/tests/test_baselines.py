import numpy as np
import pytest

from scenefusion.baselines import (
    GaussianNaiveBayes,
    LinearSvm,
    RandomForest,
    make_baseline,
    train_baseline,
)


def two_gaussians(n_per_class=100, seed=0, dim=4):
    rng = np.random.default_rng(seed)
    X = np.vstack(
        [
            rng.normal(loc=-5.0, scale=1.0, size=(n_per_class, dim)),
            rng.normal(loc=5.0, scale=1.0, size=(n_per_class, dim)),
        ]
    )
    y = np.repeat([0, 1], n_per_class)
    return X, y


class TestSeparatedGaussians:
    @pytest.mark.parametrize("kind", ["naive_bayes", "linear_svm", "random_forest"])
    def test_every_baseline_scores_high(self, kind):
        X, y = two_gaussians()
        _, report = train_baseline(kind, X, y, folds=3, seed=0)
        assert report.mean_accuracy >= 0.95

    @pytest.mark.parametrize("kind", ["naive_bayes", "linear_svm", "random_forest"])
    def test_three_class_blobs(self, kind):
        rng = np.random.default_rng(1)
        centers = np.array([[-6.0, 0.0], [6.0, 0.0], [0.0, 6.0]])
        X = np.vstack([rng.normal(loc=c, scale=1.0, size=(60, 2)) for c in centers])
        y = np.repeat(np.arange(3), 60)
        clf = make_baseline(kind, seed=0).fit(X, y)
        assert np.mean(clf.predict(X) == y) >= 0.9


class TestGaussianNaiveBayes:
    def test_single_class_predicts_it_everywhere(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(20, 3))
        y = np.full(20, 4)
        clf = GaussianNaiveBayes().fit(X, y)
        probe = rng.normal(scale=100.0, size=(10, 3))
        np.testing.assert_array_equal(clf.predict(probe), np.full(10, 4))

    def test_zero_variance_feature_handled(self):
        X = np.array([[0.0, 1.0], [0.0, 2.0], [1.0, 10.0], [1.0, 11.0]])
        y = np.array([0, 0, 1, 1])
        clf = GaussianNaiveBayes().fit(X, y)
        np.testing.assert_array_equal(clf.predict(X), y)


class TestLinearSvm:
    def test_single_class_rejected(self):
        X = np.zeros((5, 2))
        with pytest.raises(ValueError):
            LinearSvm().fit(X, np.zeros(5, dtype=int))

    def test_deterministic_given_seed(self):
        X, y = two_gaussians(50)
        a = LinearSvm(seed=7).fit(X, y)
        b = LinearSvm(seed=7).fit(X, y)
        np.testing.assert_array_equal(a.weights_, b.weights_)

    def test_margin_sign(self):
        X, y = two_gaussians(50)
        clf = LinearSvm(seed=0).fit(X, y)
        scores = clf.decision_function(X)
        assert np.mean(np.argmax(scores, axis=1) == y) >= 0.99


class TestRandomForest:
    def test_single_stump_on_threshold_separable_feature(self):
        X = np.concatenate([np.linspace(0, 1, 20), np.linspace(2, 3, 20)])[:, None]
        y = np.repeat([0, 1], 20)
        clf = RandomForest(n_trees=1, max_depth=1, seed=0).fit(X, y)
        assert np.mean(clf.predict(X) == y) == 1.0

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            RandomForest().fit(np.zeros((5, 2)), np.zeros(5, dtype=int))

    def test_deterministic_given_seed(self):
        X, y = two_gaussians(50)
        p1 = RandomForest(n_trees=10, seed=3).fit(X, y).predict(X)
        p2 = RandomForest(n_trees=10, seed=3).fit(X, y).predict(X)
        np.testing.assert_array_equal(p1, p2)

    def test_depth_limit_respected(self):
        X, y = two_gaussians(50)
        clf = RandomForest(n_trees=3, max_depth=2, seed=0).fit(X, y)

        def depth(node):
            if node.is_leaf:
                return 0
            return 1 + max(depth(node.left), depth(node.right))

        assert all(depth(tree) <= 2 for tree in clf.trees_)


class TestTrainBaseline:
    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            make_baseline("knn")

    def test_single_class_rejected_for_svm_and_forest(self):
        X = np.zeros((10, 2))
        y = np.zeros(10, dtype=int)
        for kind in ("linear_svm", "random_forest"):
            with pytest.raises(ValueError):
                train_baseline(kind, X, y, folds=2)

    def test_report_carries_fold_accuracies(self):
        X, y = two_gaussians(30)
        _, report = train_baseline("naive_bayes", X, y, folds=3, seed=1)
        assert len(report.fold_accuracies) == 3
        assert min(report.fold_accuracies) <= report.mean_accuracy <= max(report.fold_accuracies)
