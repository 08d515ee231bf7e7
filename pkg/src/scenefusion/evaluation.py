"""Shuffled k-fold cross-validation, confusion matrices, holdout scoring."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .network import TrainConfig, mlp, predict_classes, train

__all__ = [
    "FoldPlan",
    "FoldReport",
    "kfold_split",
    "confusion_matrix",
    "evaluate",
    "holdout_evaluate",
    "HoldoutResult",
    "MlpClassifier",
]


@dataclass(frozen=True)
class FoldPlan:
    """Per-sample fold assignment; folds partition the samples evenly."""

    k: int
    assignments: np.ndarray
    seed: int

    def __len__(self):
        return len(self.assignments)

    def train_test_indices(self, fold: int):
        idx = np.arange(len(self.assignments))
        mask = self.assignments == fold
        return idx[~mask], idx[mask]


def kfold_split(n: int, k: int, seed: int = 0) -> FoldPlan:
    """Shuffles 0..n-1 with the seed and deals indices round-robin into k folds."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if n < k:
        raise ValueError(f"cannot split {n} samples into {k} folds")
    rng = np.random.default_rng(seed)
    shuffled = rng.permutation(n)
    assignments = np.empty(n, dtype=int)
    assignments[shuffled] = np.arange(n) % k
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def stratified_kfold_split(labels, k: int, seed: int = 0) -> FoldPlan:
    """Optional stratified variant: deals each class round-robin separately."""
    labels = np.asarray(labels)
    n = len(labels)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if n < k:
        raise ValueError(f"cannot split {n} samples into {k} folds")
    rng = np.random.default_rng(seed)
    assignments = np.empty(n, dtype=int)
    offset = 0
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(len(idx))]
        assignments[idx] = (np.arange(len(idx)) + offset) % k
        offset += len(idx)
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def confusion_matrix(y_true, y_pred, num_classes: int) -> np.ndarray:
    """Counts with rows = true class, columns = predicted class."""
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if y_true.shape != y_pred.shape:
        raise ValueError("label arrays differ in shape")
    if np.any((y_true < 0) | (y_true >= num_classes)) or np.any(
        (y_pred < 0) | (y_pred >= num_classes)
    ):
        raise ValueError("class id out of range")
    counts = np.zeros((num_classes, num_classes), dtype=int)
    np.add.at(counts, (y_true, y_pred), 1)
    return counts


@dataclass
class FoldReport:
    k: int
    seed: int
    fold_accuracies: list
    mean_accuracy: float
    std_accuracy: float
    confusion: np.ndarray
    class_names: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "fold_accuracies": [float(a) for a in self.fold_accuracies],
            "mean_accuracy": float(self.mean_accuracy),
            "std_accuracy": float(self.std_accuracy),
            "confusion": self.confusion.tolist(),
            "class_names": list(self.class_names),
            "config": self.config,
        }

    def save_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1, sort_keys=True)

    def confusion_csv(self, path):
        write_confusion_csv(self.confusion, self.class_names, path)


def write_confusion_csv(confusion, class_names, path):
    names = list(class_names) or [str(i) for i in range(len(confusion))]
    with open(path, "w") as fh:
        fh.write("true\\predicted," + ",".join(names) + "\n")
        for name, row in zip(names, confusion):
            fh.write(name + "," + ",".join(str(int(v)) for v in row) + "\n")


def evaluate(predictor_factory, inputs, labels, plan: FoldPlan, class_names=None) -> FoldReport:
    """Trains a fresh predictor per fold on the complement and tests on the fold.

    ``predictor_factory(fold_index)`` must return an object with fit(X, y)
    and predict(X); ``inputs`` needs integer-array indexing and len().
    """
    labels = np.asarray(labels, dtype=int)
    if len(inputs) != len(labels):
        raise ValueError("inputs and labels differ in length")
    if len(plan) != len(labels):
        raise ValueError(f"fold plan covers {len(plan)} samples, dataset has {len(labels)}")
    num_classes = int(labels.max()) + 1 if class_names is None else len(class_names)
    pooled = np.zeros((num_classes, num_classes), dtype=int)
    fold_accuracies = []
    for fold in range(plan.k):
        train_idx, test_idx = plan.train_test_indices(fold)
        predictor = predictor_factory(fold)
        predictor.fit(inputs[train_idx], labels[train_idx])
        preds = np.asarray(predictor.predict(inputs[test_idx]), dtype=int)
        pooled += confusion_matrix(labels[test_idx], preds, num_classes)
        fold_accuracies.append(float(np.mean(preds == labels[test_idx])))
    return FoldReport(
        k=plan.k,
        seed=plan.seed,
        fold_accuracies=fold_accuracies,
        mean_accuracy=float(np.mean(fold_accuracies)),
        std_accuracy=float(np.std(fold_accuracies)),
        confusion=pooled,
        class_names=list(class_names) if class_names else [],
    )


@dataclass
class HoldoutResult:
    correct: int
    total: int
    accuracy: float
    confusion: np.ndarray


def holdout_evaluate(
    predictors: dict,
    inputs,
    labels,
    *,
    train_sources,
    unseen_sources,
    num_classes: int,
    class_names=None,
) -> dict:
    """Applies already-trained predictors to unseen data; never trains.

    ``unseen_sources`` are the source ids of the holdout samples; any overlap
    with ``train_sources`` is rejected, as is an empty holdout set.
    """
    labels = np.asarray(labels, dtype=int)
    if len(labels) == 0:
        raise ValueError("holdout set is empty")
    overlap = set(train_sources) & set(unseen_sources)
    if overlap:
        raise ValueError(f"unseen data shares sources with training: {sorted(overlap)}")
    results = {}
    for name, predictor in predictors.items():
        preds = np.asarray(predictor.predict(inputs), dtype=int)
        confusion = confusion_matrix(labels, preds, num_classes)
        correct = int(np.trace(confusion))
        results[name] = HoldoutResult(
            correct=correct,
            total=len(labels),
            accuracy=correct / len(labels),
            confusion=confusion,
        )
    return results


class MlpClassifier:
    """fit/predict adapter around the dense network engine.

    With standardize=True (default) features are z-scored on the training
    fold and the transform is then folded into the first layer's weights,
    so the resulting model consumes raw features directly.
    """

    def __init__(
        self,
        hidden_widths,
        num_classes,
        train_cfg: TrainConfig,
        seed: int = 0,
        standardize: bool = True,
    ):
        self.hidden_widths = list(hidden_widths)
        self.num_classes = num_classes
        self.train_cfg = train_cfg
        self.seed = seed
        self.standardize = standardize
        self.model = None

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        self.model = mlp(X.shape[1], self.hidden_widths, self.num_classes, seed=self.seed)
        if self.standardize:
            mu = X.mean(axis=0)
            sigma = X.std(axis=0)
            sigma = np.where(sigma < 1e-8, 1.0, sigma)
            train(self.model, (X - mu) / sigma, y, self.train_cfg)
            absorb_standardization(self.model, mu, sigma)
        else:
            train(self.model, X, y, self.train_cfg)
        return self

    def predict(self, X):
        return predict_classes(self.model, np.asarray(X, dtype=np.float64))


def absorb_standardization(model, mu, sigma):
    """Rewrites the first layer so the model accepts unstandardized input.

    W(x - mu)/sigma + b == (W/sigma) x + (b - W (mu/sigma)).
    """
    W0 = model.weights[0]
    model.biases[0] = model.biases[0] - W0 @ (mu / sigma)
    model.weights[0] = W0 / sigma[None, :]
    return model
