"""Classical classifiers the fusion head is compared against.

All three operate on the concatenated branch logits ("the two networks as
feature generators"): a per-class per-feature Gaussian naive Bayes, a
one-vs-rest linear SVM trained by hinge subgradient descent, and a random
forest of depth-limited CART trees with sqrt(D) feature sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluation import FoldReport, evaluate, kfold_split

__all__ = [
    "GaussianNaiveBayes",
    "LinearSvm",
    "RandomForest",
    "BASELINE_KINDS",
    "make_baseline",
    "train_baseline",
]


class GaussianNaiveBayes:
    """Independent Gaussians per class and feature, log-posterior argmax."""

    def __init__(self, var_floor: float = 1e-9):
        self.var_floor = var_floor

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=int)
        self.classes_ = np.unique(y)
        self.priors_ = np.array([np.mean(y == c) for c in self.classes_])
        self.means_ = np.array([X[y == c].mean(axis=0) for c in self.classes_])
        variances = np.array([X[y == c].var(axis=0) for c in self.classes_])
        self.vars_ = np.maximum(variances, self.var_floor)
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        log_posteriors = []
        for prior, mu, var in zip(self.priors_, self.means_, self.vars_):
            ll = -0.5 * (np.log(2 * np.pi * var) + (X - mu) ** 2 / var).sum(axis=1)
            log_posteriors.append(np.log(prior) + ll)
        return self.classes_[np.argmax(np.column_stack(log_posteriors), axis=1)]


class LinearSvm:
    """One-vs-rest linear SVM, Pegasos-style hinge subgradient descent."""

    def __init__(self, regularization: float = 1e-3, epochs: int = 200, seed: int = 0):
        self.regularization = regularization
        self.epochs = epochs
        self.seed = seed

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=int)
        self.classes_ = np.unique(y)
        if len(self.classes_) < 2:
            raise ValueError("linear SVM needs at least 2 classes")
        n, d = X.shape
        lam = self.regularization
        self.weights_ = np.zeros((len(self.classes_), d))
        self.biases_ = np.zeros(len(self.classes_))
        rng = np.random.default_rng(self.seed)
        for ci, cls in enumerate(self.classes_):
            target = np.where(y == cls, 1.0, -1.0)
            w = np.zeros(d)
            b = 0.0
            t = 0
            for _ in range(self.epochs):
                for i in rng.permutation(n):
                    t += 1
                    lr = 1.0 / (lam * t)
                    margin = target[i] * (X[i] @ w + b)
                    w *= 1.0 - lr * lam
                    if margin < 1.0:
                        w += lr * target[i] * X[i]
                        b += lr * target[i]
            self.weights_[ci] = w
            self.biases_[ci] = b
        return self

    def decision_function(self, X):
        return np.asarray(X, dtype=np.float64) @ self.weights_.T + self.biases_

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


@dataclass
class _TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None
    prediction: int = -1

    @property
    def is_leaf(self):
        return self.left is None


def _majority(counts):
    return int(np.argmax(counts))  # ties break toward the smaller class id


def _best_split(X, y, feature_ids, num_classes):
    """(feature, threshold, weighted_gini) of the best cut, or None."""
    n = len(y)
    best = None
    onehot = np.zeros((n, num_classes))
    onehot[np.arange(n), y] = 1.0
    for f in feature_ids:
        order = np.argsort(X[:, f], kind="stable")
        values = X[order, f]
        left_counts = np.cumsum(onehot[order], axis=0)[:-1]  # counts left of cut i+1
        cut_ok = values[1:] > values[:-1]
        if not cut_ok.any():
            continue
        left_n = np.arange(1, n)
        right_counts = left_counts[-1] + onehot[order][-1] - left_counts
        right_n = n - left_n
        gini_left = 1.0 - ((left_counts / left_n[:, None]) ** 2).sum(axis=1)
        gini_right = 1.0 - ((right_counts / right_n[:, None]) ** 2).sum(axis=1)
        weighted = (left_n * gini_left + right_n * gini_right) / n
        weighted = np.where(cut_ok, weighted, np.inf)
        idx = int(np.argmin(weighted))
        if best is None or weighted[idx] < best[2]:
            threshold = 0.5 * (values[idx] + values[idx + 1])
            best = (f, threshold, float(weighted[idx]))
    return best


def _grow_tree(X, y, depth, max_depth, num_classes, feature_count, rng):
    counts = np.bincount(y, minlength=num_classes)
    node = _TreeNode(prediction=_majority(counts))
    if depth >= max_depth or len(np.unique(y)) == 1 or len(y) < 2:
        return node
    feature_ids = rng.choice(X.shape[1], size=feature_count, replace=False)
    split = _best_split(X, y, feature_ids, num_classes)
    if split is None:
        return node
    f, threshold, _ = split
    left_mask = X[:, f] <= threshold
    node.feature, node.threshold = f, threshold
    node.left = _grow_tree(X[left_mask], y[left_mask], depth + 1, max_depth, num_classes, feature_count, rng)
    node.right = _grow_tree(X[~left_mask], y[~left_mask], depth + 1, max_depth, num_classes, feature_count, rng)
    return node


class RandomForest:
    """Bagged depth-limited CART trees with sqrt(D) features per split."""

    def __init__(self, n_trees: int = 100, max_depth: int = 12, seed: int = 0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.seed = seed

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=int)
        self.classes_ = np.unique(y)
        if len(self.classes_) < 2:
            raise ValueError("random forest needs at least 2 classes")
        self.num_classes_ = int(y.max()) + 1
        n, d = X.shape
        feature_count = max(1, int(np.sqrt(d)))
        self.trees_ = []
        for tree_idx in range(self.n_trees):
            rng = np.random.default_rng([self.seed, tree_idx])
            idx = rng.integers(0, n, size=n)  # bootstrap sample
            self.trees_.append(
                _grow_tree(X[idx], y[idx], 0, self.max_depth, self.num_classes_, feature_count, rng)
            )
        return self

    def _predict_tree(self, node, X):
        out = np.empty(len(X), dtype=int)
        stack = [(node, np.arange(len(X)))]
        while stack:
            current, idx = stack.pop()
            if current.is_leaf:
                out[idx] = current.prediction
                continue
            mask = X[idx, current.feature] <= current.threshold
            stack.append((current.left, idx[mask]))
            stack.append((current.right, idx[~mask]))
        return out

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        votes = np.zeros((len(X), self.num_classes_), dtype=int)
        for tree in self.trees_:
            preds = self._predict_tree(tree, X)
            votes[np.arange(len(X)), preds] += 1
        return np.argmax(votes, axis=1)


BASELINE_KINDS = ("naive_bayes", "linear_svm", "random_forest")


def make_baseline(kind: str, seed: int = 0, **params):
    if kind == "naive_bayes":
        return GaussianNaiveBayes(**params)
    if kind == "linear_svm":
        return LinearSvm(seed=seed, **params)
    if kind == "random_forest":
        return RandomForest(seed=seed, **params)
    raise ValueError(f"unknown baseline kind {kind!r}; expected one of {BASELINE_KINDS}")


def train_baseline(kind: str, features, labels, folds: int = 10, seed: int = 0, **params):
    """Fits the named classical model and scores it with k-fold CV.

    Returns (classifier trained on the full set, FoldReport). Single-class
    data is rejected for svm/forest; naive Bayes degenerates gracefully.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=int)
    if kind in ("linear_svm", "random_forest") and len(np.unique(y)) < 2:
        raise ValueError(f"{kind} needs at least 2 classes")
    plan = kfold_split(len(X), folds, seed)
    report = evaluate(
        lambda fold: make_baseline(kind, seed=seed + fold, **params), X, y, plan
    )
    classifier = make_baseline(kind, seed=seed, **params).fit(X, y)
    return classifier, report
