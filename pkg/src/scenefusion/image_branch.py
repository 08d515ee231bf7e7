"""Image branch: preprocessing, frozen feature sources, and the head sweep.

The feature source is pluggable: either the builtin trained-then-frozen CNN
from convnet, or precomputed feature rows imported from a CSV (so externally
generated VGG16 features can drive the faithful protocol). A dense ReLU
"interpretation" head of swept width plus a softmax layer sits on top.
"""

from __future__ import annotations

import csv

import numpy as np
from PIL import Image

from .convnet import BackboneSpec, BuiltinCnnBackbone
from .evaluation import MlpClassifier, evaluate, kfold_split
from .network import TrainConfig

__all__ = [
    "center_crop_square",
    "resize_bilinear",
    "preprocess_image",
    "load_image",
    "ImportedFeatureBackbone",
    "backbone_features",
    "extract_feature_matrix",
    "head_sweep",
]


def center_crop_square(pixels: np.ndarray) -> np.ndarray:
    """Largest centered square of an (H, W, C) array."""
    h, w = pixels.shape[:2]
    side = min(h, w)
    top = (h - side) // 2
    left = (w - side) // 2
    return pixels[top : top + side, left : left + side]


def resize_bilinear(pixels: np.ndarray, size: int) -> np.ndarray:
    """Bilinear resample of a square image to size x size (half-pixel centers).

    A no-op when the input is already the target size, which makes the full
    preprocessing chain idempotent.
    """
    pixels = np.asarray(pixels, dtype=np.float64)
    src = pixels.shape[0]
    if pixels.shape[0] != pixels.shape[1]:
        raise ValueError("resize_bilinear expects a square image")
    if src == size:
        return pixels
    scale = src / size
    coords = (np.arange(size) + 0.5) * scale - 0.5
    lo = np.clip(np.floor(coords).astype(int), 0, src - 1)
    hi = np.clip(lo + 1, 0, src - 1)
    frac = np.clip(coords - lo, 0.0, 1.0)
    rows = pixels[lo][:, hi] * frac[None, :, None] + pixels[lo][:, lo] * (1 - frac)[None, :, None]
    rows_hi = pixels[hi][:, hi] * frac[None, :, None] + pixels[hi][:, lo] * (1 - frac)[None, :, None]
    return rows * (1 - frac)[:, None, None] + rows_hi * frac[:, None, None]


def preprocess_image(pixels, size: int = 128) -> np.ndarray:
    """Center-crop to square, resize to size x size, values in [0, 1].

    Integer arrays are assumed 8-bit and scaled by 1/255; float arrays are
    assumed to hold [0, 1] values already.
    """
    raw = np.asarray(pixels)
    if raw.ndim != 3 or raw.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got {raw.shape}")
    pixels = raw.astype(np.float64)
    if np.issubdtype(raw.dtype, np.integer):
        pixels = pixels / 255.0
    out = resize_bilinear(center_crop_square(pixels), size)
    return np.clip(out, 0.0, 1.0)


def load_image(path, size: int = 128) -> np.ndarray:
    with Image.open(path) as img:
        pixels = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    return preprocess_image(pixels, size)


class ImportedFeatureBackbone:
    """Precomputed feature rows keyed by sample id (CSV: sample_id, f1..fD)."""

    def __init__(self, table: dict, feature_dim: int):
        self.table = {k: np.asarray(v, dtype=np.float64) for k, v in table.items()}
        self.feature_dim = feature_dim
        for sid, row in self.table.items():
            if row.shape != (feature_dim,):
                raise ValueError(f"feature row {sid!r} has length {len(row)}, want {feature_dim}")

    @classmethod
    def from_csv(cls, path) -> "ImportedFeatureBackbone":
        table = {}
        feature_dim = None
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row:
                    continue
                sid, values = row[0], [float(v) for v in row[1:]]
                if feature_dim is None:
                    feature_dim = len(values)
                table[sid] = values
        if not table:
            raise ValueError(f"no feature rows in {path}")
        return cls(table, feature_dim)

    def lookup(self, sample_id: str) -> np.ndarray:
        try:
            return self.table[sample_id]
        except KeyError:
            raise KeyError(f"no imported features for sample id {sample_id!r}") from None


def backbone_features(backbone, image=None, sample_id=None) -> np.ndarray:
    """Feature vector from either backbone kind.

    Builtin CNNs consume the preprocessed image; imported tables are keyed
    by sample id.
    """
    if isinstance(backbone, ImportedFeatureBackbone):
        if sample_id is None:
            raise ValueError("imported backbone needs a sample_id")
        return backbone.lookup(sample_id)
    if image is None:
        raise ValueError("builtin backbone needs an image")
    return backbone.features(np.asarray(image, dtype=np.float64))


def extract_feature_matrix(backbone, images=None, sample_ids=None) -> np.ndarray:
    """Feature rows for a whole dataset, in sample order."""
    if isinstance(backbone, ImportedFeatureBackbone):
        return np.stack([backbone.lookup(sid) for sid in sample_ids])
    return backbone.features(np.asarray(images, dtype=np.float64))


def head_sweep(
    features,
    labels,
    widths,
    *,
    folds: int = 10,
    seed: int = 0,
    train_cfg: TrainConfig = TrainConfig(epochs=30),
    num_classes=None,
):
    """Cross-validated accuracy of a (width-ReLU -> softmax) head per width.

    Returns (best_width, rows) where rows are (width, mean_accuracy,
    std_accuracy); ties break toward the smaller width.
    """
    widths = sorted(set(int(w) for w in widths))
    if not widths:
        raise ValueError("widths must be nonempty")
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=int)
    if len(features) == 0:
        raise ValueError("empty dataset")
    if num_classes is None:
        num_classes = int(labels.max()) + 1
    plan = kfold_split(len(features), folds, seed)
    rows = []
    best_width, best_acc = None, -1.0
    for width in widths:
        report = evaluate(
            lambda fold: MlpClassifier([width], num_classes, train_cfg, seed=seed + fold),
            features,
            labels,
            plan,
        )
        rows.append((width, report.mean_accuracy, report.std_accuracy))
        if report.mean_accuracy > best_acc:
            best_width, best_acc = width, report.mean_accuracy
    return best_width, rows
