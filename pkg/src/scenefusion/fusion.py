"""Late fusion: a trainable head over the two frozen branches' logits.

Both branches have their softmax removed; the head consumes the
concatenated pre-softmax class scores (audio first) and maps them through
one ReLU layer of swept width to a fresh softmax. Branch parameters are
never touched by anything here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluation import MlpClassifier, evaluate, kfold_split
from .network import NetworkModel, TrainConfig, mlp, predict_logits

__all__ = [
    "FusedPairs",
    "FusionModel",
    "PairedArrays",
    "fused_feature_vector",
    "build_fusion_model",
    "train_fusion_head",
    "fusion_head_sweep",
    "FusedClassifier",
]


class PairedArrays:
    """Parallel arrays with joint fancy indexing, for fold slicing."""

    def __init__(self, audio, image):
        self.audio = np.asarray(audio, dtype=np.float64)
        self.image = np.asarray(image, dtype=np.float64)
        if len(self.audio) != len(self.image):
            raise ValueError("audio and image arrays differ in length")

    def __len__(self):
        return len(self.audio)

    def __getitem__(self, idx):
        return PairedArrays(self.audio[idx], self.image[idx])


@dataclass
class FusedPairs:
    """Synchronized per-sample audio features, image features, and labels."""

    audio_features: np.ndarray
    image_features: np.ndarray
    labels: np.ndarray
    sample_ids: list

    def __post_init__(self):
        n = len(self.audio_features)
        if not (len(self.image_features) == len(self.labels) == len(self.sample_ids) == n):
            raise ValueError("paired dataset pieces differ in length")

    def __len__(self):
        return len(self.sample_ids)

    @classmethod
    def join(cls, audio_ids, audio_features, image_ids, image_features, labels_by_id):
        """Joins two modality tables on sample id; any orphan is an error."""
        audio_index = {sid: i for i, sid in enumerate(audio_ids)}
        image_index = {sid: i for i, sid in enumerate(image_ids)}
        missing = sorted(set(audio_index) ^ set(image_index))
        if missing:
            raise ValueError(f"unpaired sample ids across modalities: {missing[:5]}")
        ids = sorted(audio_index)
        return cls(
            audio_features=np.asarray([audio_features[audio_index[s]] for s in ids]),
            image_features=np.asarray([image_features[image_index[s]] for s in ids]),
            labels=np.asarray([labels_by_id[s] for s in ids], dtype=int),
            sample_ids=ids,
        )


@dataclass
class FusionModel:
    """Two frozen branch networks plus the trainable interpretation head."""

    audio_branch: NetworkModel
    image_branch: NetworkModel
    head: NetworkModel
    num_classes: int

    def __post_init__(self):
        c = self.num_classes
        if self.audio_branch.output_dim != c or self.image_branch.output_dim != c:
            raise ValueError("branch output dims must equal num_classes")
        if self.head.input_dim != 2 * c:
            raise ValueError(f"fusion head must accept {2 * c} inputs")

    def branch_hashes(self):
        return (self.audio_branch.parameter_hash(), self.image_branch.parameter_hash())


def fused_feature_vector(model: FusionModel, audio_features, image_features) -> np.ndarray:
    """Concatenated branch logits, audio first; works on vectors or batches."""
    a = predict_logits(model.audio_branch, audio_features)
    v = predict_logits(model.image_branch, image_features)
    return np.concatenate([a, v], axis=-1)


def build_fusion_model(audio_branch: NetworkModel, image_branch: NetworkModel, width: int, seed: int = 0) -> FusionModel:
    """Freezes clones of the branches and attaches an untrained head."""
    num_classes = audio_branch.output_dim
    head = mlp(2 * num_classes, [width], num_classes, seed=seed)
    return FusionModel(
        audio_branch=audio_branch.clone().freeze(),
        image_branch=image_branch.clone().freeze(),
        head=head,
        num_classes=num_classes,
    )


def train_fusion_head(
    model: FusionModel,
    pairs: FusedPairs,
    train_cfg: TrainConfig = TrainConfig(epochs=60),
    seed: int = 0,
) -> FusionModel:
    """Trains only the head on the frozen branches' fused vectors."""
    fused = fused_feature_vector(model, pairs.audio_features, pairs.image_features)
    width = model.head.layers[0].output_dim
    clf = MlpClassifier([width], model.num_classes, train_cfg, seed=seed)
    clf.fit(fused, pairs.labels)
    model.head = clf.model
    return model


def fusion_head_sweep(
    audio_branch: NetworkModel,
    image_branch: NetworkModel,
    pairs: FusedPairs,
    widths,
    *,
    folds: int = 10,
    seed: int = 0,
    train_cfg: TrainConfig = TrainConfig(epochs=60),
):
    """Cross-validated accuracy of the fusion head per candidate width.

    Branches stay fixed (they are the frozen feature generators); only the
    head is retrained per fold. Returns (best_width, rows of
    (width, mean_accuracy, std_accuracy)); ties break to the smaller width.
    """
    widths = sorted(set(int(w) for w in widths))
    if not widths:
        raise ValueError("widths must be nonempty")
    if len(pairs) == 0:
        raise ValueError("empty dataset")
    frozen = build_fusion_model(audio_branch, image_branch, widths[0], seed=seed)
    fused = fused_feature_vector(frozen, pairs.audio_features, pairs.image_features)
    plan = kfold_split(len(pairs), folds, seed)
    rows = []
    best_width, best_acc = None, -1.0
    for width in widths:
        report = evaluate(
            lambda fold: MlpClassifier([width], frozen.num_classes, train_cfg, seed=seed + fold),
            fused,
            pairs.labels,
            plan,
        )
        rows.append((width, report.mean_accuracy, report.std_accuracy))
        if report.mean_accuracy > best_acc:
            best_width, best_acc = width, report.mean_accuracy
    return best_width, rows


class FusedClassifier:
    """End-to-end fused predictor for fold-level evaluation.

    fit() trains the audio net, the image head, and the fusion head from
    scratch on the training fold (inputs are a PairedArrays of raw audio
    features and backbone image features).
    """

    def __init__(
        self,
        audio_hidden,
        image_width,
        fusion_width,
        num_classes,
        audio_train: TrainConfig,
        head_train: TrainConfig,
        fusion_train: TrainConfig,
        seed: int = 0,
    ):
        self.audio_hidden = list(audio_hidden)
        self.image_width = image_width
        self.fusion_width = fusion_width
        self.num_classes = num_classes
        self.audio_train = audio_train
        self.head_train = head_train
        self.fusion_train = fusion_train
        self.seed = seed
        self.model = None

    def fit(self, paired: PairedArrays, y):
        audio_clf = MlpClassifier(self.audio_hidden, self.num_classes, self.audio_train, seed=self.seed)
        audio_clf.fit(paired.audio, y)
        image_clf = MlpClassifier([self.image_width], self.num_classes, self.head_train, seed=self.seed + 1)
        image_clf.fit(paired.image, y)
        self.model = build_fusion_model(
            audio_clf.model, image_clf.model, self.fusion_width, seed=self.seed + 2
        )
        pairs = FusedPairs(
            audio_features=paired.audio,
            image_features=paired.image,
            labels=np.asarray(y, dtype=int),
            sample_ids=[str(i) for i in range(len(y))],
        )
        train_fusion_head(self.model, pairs, self.fusion_train, seed=self.seed + 3)
        return self

    def predict(self, paired: PairedArrays):
        fused = fused_feature_vector(self.model, paired.audio, paired.image)
        return np.argmax(predict_logits(self.model.head, fused), axis=-1)
