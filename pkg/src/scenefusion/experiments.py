"""Experiment drivers shared by the CLI and the acceptance suite.

run_comparison scores the audio-only, image-only, and fused networks plus
the three classical baselines on one shared fold plan, retraining every
model from scratch inside each fold (branches are trained once per fold
and reused by the fusion head and the baselines, which consume the same
fused feature vectors).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio_features import AudioClip, MfccConfig, clip_features
from .baselines import BASELINE_KINDS, make_baseline
from .convnet import BuiltinCnnBackbone
from .datasets import PairedDataset, mfcc_matrix
from .evaluation import (
    FoldReport,
    HoldoutResult,
    MlpClassifier,
    confusion_matrix,
    holdout_evaluate,
    kfold_split,
)
from .fusion import (
    FusedPairs,
    FusionModel,
    PairedArrays,
    build_fusion_model,
    fused_feature_vector,
    train_fusion_head,
)
from .network import (
    NetworkModel,
    TrainConfig,
    model_from_dict,
    model_to_dict,
    predict_logits,
    predict_proba,
)

__all__ = [
    "ComparisonConfig",
    "run_comparison",
    "FusionArtifact",
    "save_fusion_artifact",
    "load_fusion_artifact",
    "run_holdout",
]

COMPARISON_MODELS = ("audio", "image", "fusion") + BASELINE_KINDS


@dataclass(frozen=True)
class ComparisonConfig:
    audio_hidden: tuple = (32,)
    image_width: int = 16
    fusion_width: int = 16
    folds: int = 3
    seed: int = 0
    audio_train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=60, learning_rate=0.02))
    head_train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=60, learning_rate=0.02))
    fusion_train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=60))
    forest_trees: int = 100
    forest_depth: int = 12
    svm_regularization: float = 1e-3
    svm_epochs: int = 200


def run_comparison(audio_features, image_features, labels, num_classes, cfg: ComparisonConfig):
    """FoldReport per model name, all computed on the same fold plan."""
    audio_X = np.asarray(audio_features, dtype=np.float64)
    image_X = np.asarray(image_features, dtype=np.float64)
    labels = np.asarray(labels, dtype=int)
    plan = kfold_split(len(labels), cfg.folds, cfg.seed)
    pooled = {name: np.zeros((num_classes, num_classes), dtype=int) for name in COMPARISON_MODELS}
    accs = {name: [] for name in COMPARISON_MODELS}

    def baseline_params(kind):
        if kind == "random_forest":
            return {"n_trees": cfg.forest_trees, "max_depth": cfg.forest_depth}
        if kind == "linear_svm":
            return {"regularization": cfg.svm_regularization, "epochs": cfg.svm_epochs}
        return {}

    for fold in range(plan.k):
        train_idx, test_idx = plan.train_test_indices(fold)
        y_tr, y_te = labels[train_idx], labels[test_idx]
        seed = cfg.seed * 1000 + fold

        audio_clf = MlpClassifier(list(cfg.audio_hidden), num_classes, cfg.audio_train, seed=seed)
        audio_clf.fit(audio_X[train_idx], y_tr)
        image_clf = MlpClassifier([cfg.image_width], num_classes, cfg.head_train, seed=seed + 1)
        image_clf.fit(image_X[train_idx], y_tr)

        fusion = build_fusion_model(audio_clf.model, image_clf.model, cfg.fusion_width, seed=seed + 2)
        fused_tr = fused_feature_vector(fusion, audio_X[train_idx], image_X[train_idx])
        fused_te = fused_feature_vector(fusion, audio_X[test_idx], image_X[test_idx])
        fusion_clf = MlpClassifier([cfg.fusion_width], num_classes, cfg.fusion_train, seed=seed + 3)
        fusion_clf.fit(fused_tr, y_tr)

        predictions = {
            "audio": audio_clf.predict(audio_X[test_idx]),
            "image": image_clf.predict(image_X[test_idx]),
            "fusion": fusion_clf.predict(fused_te),
        }
        for kind in BASELINE_KINDS:
            clf = make_baseline(kind, seed=seed + 4, **baseline_params(kind))
            clf.fit(fused_tr, y_tr)
            predictions[kind] = clf.predict(fused_te)

        for name, preds in predictions.items():
            pooled[name] += confusion_matrix(y_te, preds, num_classes)
            accs[name].append(float(np.mean(np.asarray(preds) == y_te)))

    return {
        name: FoldReport(
            k=plan.k,
            seed=cfg.seed,
            fold_accuracies=accs[name],
            mean_accuracy=float(np.mean(accs[name])),
            std_accuracy=float(np.std(accs[name])),
            confusion=pooled[name],
        )
        for name in COMPARISON_MODELS
    }


# --- fusion artifact: everything needed to classify a raw (image, audio) pair ---

ARTIFACT_VERSION = "scenefusion-fusion/1"


@dataclass
class FusionArtifact:
    fusion: FusionModel
    backbone: BuiltinCnnBackbone | None
    backbone_kind: str
    feature_dim: int
    class_names: list
    mfcc_config: MfccConfig
    train_sources: list

    def audio_feature_matrix(self, dataset: PairedDataset) -> np.ndarray:
        return mfcc_matrix(dataset, self.mfcc_config)

    def image_feature_matrix(self, dataset: PairedDataset, imported=None) -> np.ndarray:
        if self.backbone_kind == "imported_features":
            if imported is None:
                raise ValueError("this artifact needs an imported feature table")
            return np.stack([imported.lookup(sid) for sid in dataset.sample_ids])
        return self.backbone.features(dataset.images)

    def predict_pair(self, image, audio_samples, sample_rate):
        """Per-branch and fused class posteriors for one synchronized pair."""
        audio_feats = clip_features(AudioClip(audio_samples, sample_rate), self.mfcc_config)
        image_feats = self.backbone.features(np.asarray(image, dtype=np.float64))
        audio_probs = predict_proba(self.fusion.audio_branch, audio_feats)
        image_probs = predict_proba(self.fusion.image_branch, image_feats)
        fused = fused_feature_vector(self.fusion, audio_feats, image_feats)
        fused_probs = predict_proba(self.fusion.head, fused)
        return {"audio": audio_probs, "image": image_probs, "fused": fused_probs}


def save_fusion_artifact(path, artifact: FusionArtifact):
    doc = {
        "format": ARTIFACT_VERSION,
        "audio_branch": model_to_dict(artifact.fusion.audio_branch),
        "image_branch": model_to_dict(artifact.fusion.image_branch),
        "head": model_to_dict(artifact.fusion.head),
        "backbone": artifact.backbone.to_dict() if artifact.backbone else None,
        "backbone_kind": artifact.backbone_kind,
        "feature_dim": artifact.feature_dim,
        "class_names": list(artifact.class_names),
        "mfcc_config": dataclasses.asdict(artifact.mfcc_config),
        "train_sources": sorted(artifact.train_sources),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)


def load_fusion_artifact(path) -> FusionArtifact:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != ARTIFACT_VERSION:
        raise ValueError(f"unsupported artifact format {doc.get('format')!r}")
    fusion = FusionModel(
        audio_branch=model_from_dict(doc["audio_branch"]),
        image_branch=model_from_dict(doc["image_branch"]),
        head=model_from_dict(doc["head"]),
        num_classes=len(doc["class_names"]),
    )
    backbone = (
        BuiltinCnnBackbone.from_dict(doc["backbone"]) if doc["backbone"] is not None else None
    )
    return FusionArtifact(
        fusion=fusion,
        backbone=backbone,
        backbone_kind=doc["backbone_kind"],
        feature_dim=doc["feature_dim"],
        class_names=doc["class_names"],
        mfcc_config=MfccConfig(**doc["mfcc_config"]),
        train_sources=doc["train_sources"],
    )


class _AudioOnly:
    def __init__(self, artifact):
        self.artifact = artifact

    def predict(self, paired: PairedArrays):
        return np.argmax(predict_logits(self.artifact.fusion.audio_branch, paired.audio), axis=-1)


class _ImageOnly:
    def __init__(self, artifact):
        self.artifact = artifact

    def predict(self, paired: PairedArrays):
        return np.argmax(predict_logits(self.artifact.fusion.image_branch, paired.image), axis=-1)


class _FusedModel:
    def __init__(self, artifact):
        self.artifact = artifact

    def predict(self, paired: PairedArrays):
        fused = fused_feature_vector(self.artifact.fusion, paired.audio, paired.image)
        return np.argmax(predict_logits(self.artifact.fusion.head, fused), axis=-1)


def run_holdout(artifact: FusionArtifact, unseen: PairedDataset, imported=None) -> dict:
    """Applies the trained branches and fusion head to completely unseen data."""
    if unseen.class_names != list(artifact.class_names):
        raise ValueError(
            f"class list mismatch: unseen {unseen.class_names} vs artifact {artifact.class_names}"
        )
    paired = PairedArrays(
        artifact.audio_feature_matrix(unseen),
        artifact.image_feature_matrix(unseen, imported),
    )
    predictors = {
        "audio": _AudioOnly(artifact),
        "image": _ImageOnly(artifact),
        "fusion": _FusedModel(artifact),
    }
    return holdout_evaluate(
        predictors,
        paired,
        unseen.labels,
        train_sources=artifact.train_sources,
        unseen_sources=unseen.source_ids,
        num_classes=len(artifact.class_names),
    )
