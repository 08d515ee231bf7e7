"""Convolution/pooling primitives and the small trainable image backbone.

Images are channel-last (H, W, C); kernels are (kh, kw, in_c, out_c).
Convolutions are valid-padding cross-correlations. The builtin backbone is
a conv/relu/maxpool stack trained end-to-end with a throwaway softmax head,
then frozen and used purely as a feature extractor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import (
    LayerSpec,
    TrainConfig,
    _loss_and_grads,
    init_network,
    sgd_step,
)

__all__ = [
    "conv2d",
    "maxpool2d",
    "BackboneSpec",
    "BuiltinCnnBackbone",
    "train_builtin_backbone",
]


def _patch_view(x, kh, kw, stride):
    """Sliding (kh, kw) windows of a batch: (N, oh, ow, C, kh, kw), no copy."""
    view = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(1, 2))
    return view[:, ::stride, ::stride]


def conv2d_batch(x, kernels, stride=1) -> np.ndarray:
    n, h, w, c_in = x.shape
    kh, kw, kc, c_out = kernels.shape
    if kc != c_in:
        raise ValueError(f"kernel channels {kc} != input channels {c_in}")
    if kh > h or kw > w:
        raise ValueError(f"kernel {kh}x{kw} larger than input {h}x{w}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    patches = _patch_view(x, kh, kw, stride)
    return np.einsum("nxyckl,klco->nxyo", patches, kernels, optimize=True)


def conv2d_backward_batch(x, kernels, stride, d_out):
    """Gradients of a conv2d_batch output w.r.t. input and kernels."""
    kh, kw, _, c_out = kernels.shape
    patches = _patch_view(x, kh, kw, stride)
    d_kernels = np.einsum("nxyckl,nxyo->klco", patches, d_out, optimize=True)
    d_x = np.zeros_like(x)
    oh, ow = d_out.shape[1], d_out.shape[2]
    for a in range(kh):
        for b in range(kw):
            update = np.einsum("nxyo,co->nxyc", d_out, kernels[a, b], optimize=True)
            d_x[:, a : a + oh * stride : stride, b : b + ow * stride : stride, :] += update
    return d_x, d_kernels


def conv2d(image, kernels, stride: int = 1) -> np.ndarray:
    """Valid cross-correlation of one (H, W, C) image with (kh, kw, C, out) kernels."""
    image = np.asarray(image, dtype=np.float64)
    kernels = np.asarray(kernels, dtype=np.float64)
    if image.ndim != 3 or kernels.ndim != 4:
        raise ValueError("conv2d expects a 3-D image and 4-D kernels")
    return conv2d_batch(image[None], kernels, stride)[0]


def maxpool2d_batch(x, window: int) -> np.ndarray:
    n, h, w, c = x.shape
    if window < 1:
        raise ValueError("pool window must be >= 1")
    if h % window or w % window:
        raise ValueError(f"spatial dims {h}x{w} not divisible by window {window}")
    tiles = x.reshape(n, h // window, window, w // window, window, c)
    return tiles.max(axis=(2, 4))


def maxpool2d_backward_batch(x, window, d_out):
    """Routes pooled gradients back to the window maxima (ties split equally)."""
    n, h, w, c = x.shape
    tiles = x.reshape(n, h // window, window, w // window, window, c)
    peak = tiles.max(axis=(2, 4), keepdims=True)
    mask = tiles == peak
    mask = mask / mask.sum(axis=(2, 4), keepdims=True)
    d_tiles = mask * d_out.reshape(n, h // window, 1, w // window, 1, c)
    return d_tiles.reshape(x.shape)


def maxpool2d(x, window: int) -> np.ndarray:
    """Per-channel window maximum of one (H, W, C) array."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError("maxpool2d expects a 3-D array")
    return maxpool2d_batch(x[None], window)[0]


@dataclass(frozen=True)
class BackboneSpec:
    """Configuration of the frozen image feature source.

    kind "builtin_cnn" runs the conv stack below; "imported_features" reads
    precomputed rows from a CSV keyed by sample id (feature_dim required).
    """

    kind: str = "builtin_cnn"
    conv_blocks: tuple = ((8, 5, 2), (16, 3, 2), (32, 3, 2))
    input_size: int = 128
    input_channels: int = 3
    feature_dim: int | None = None

    def __post_init__(self):
        if self.kind not in ("builtin_cnn", "imported_features"):
            raise ValueError(f"unknown backbone kind {self.kind!r}")
        if self.kind == "imported_features":
            if self.feature_dim is None or self.feature_dim < 1:
                raise ValueError("imported_features needs feature_dim >= 1")
            return
        object.__setattr__(
            self, "conv_blocks", tuple(tuple(map(int, blk)) for blk in self.conv_blocks)
        )
        self.stack_shapes()  # validates divisibility

    def stack_shapes(self):
        """(size, channels) after each block; raises if the stack is invalid."""
        size, channels = self.input_size, self.input_channels
        shapes = []
        for filters, kernel, pool in self.conv_blocks:
            size = size - kernel + 1
            if size < 1:
                raise ValueError(f"kernel {kernel} too large at size {size + kernel - 1}")
            if size % pool:
                raise ValueError(
                    f"conv output {size} not divisible by pool {pool}; adjust kernels"
                )
            size //= pool
            channels = filters
            shapes.append((size, channels))
        return shapes

    def builtin_feature_dim(self) -> int:
        size, channels = self.stack_shapes()[-1]
        return size * size * channels


class BuiltinCnnBackbone:
    """Frozen conv/relu/pool stack; flattened final maps are the features."""

    def __init__(self, spec: BackboneSpec, kernels):
        if spec.kind != "builtin_cnn":
            raise ValueError("BuiltinCnnBackbone needs a builtin_cnn spec")
        self.spec = spec
        self.kernels = [np.asarray(k, dtype=np.float64) for k in kernels]

    @property
    def feature_dim(self) -> int:
        return self.spec.builtin_feature_dim()

    def parameter_hash(self) -> str:
        import hashlib

        digest = hashlib.sha256()
        for k in self.kernels:
            digest.update(k.tobytes())
        return digest.hexdigest()

    def _forward(self, x):
        """Forward stack keeping intermediates: list of (input, conv_out, relu_out)."""
        caches = []
        for kernels, (_, _, pool) in zip(self.kernels, self.spec.conv_blocks):
            z = conv2d_batch(x, kernels)
            a = np.maximum(0.0, z)
            caches.append((x, z, a, pool))
            x = maxpool2d_batch(a, pool)
        return x, caches

    def features(self, images, batch_size: int = 16) -> np.ndarray:
        """Flattened stack output for one (H, W, C) image or a batch of them."""
        images = np.asarray(images, dtype=np.float64)
        single = images.ndim == 3
        if single:
            images = images[None]
        out = []
        for start in range(0, len(images), batch_size):
            x, _ = self._forward(images[start : start + batch_size])
            out.append(x.reshape(len(x), -1))
        feats = np.concatenate(out) if out else np.zeros((0, self.feature_dim))
        return feats[0] if single else feats

    def to_dict(self) -> dict:
        return {
            "kind": "builtin_cnn",
            "conv_blocks": [list(b) for b in self.spec.conv_blocks],
            "input_size": self.spec.input_size,
            "input_channels": self.spec.input_channels,
            "kernels": [
                {"shape": list(k.shape), "f64hex": k.astype("<f8").tobytes().hex()}
                for k in self.kernels
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BuiltinCnnBackbone":
        spec = BackboneSpec(
            kind="builtin_cnn",
            conv_blocks=tuple(tuple(b) for b in doc["conv_blocks"]),
            input_size=doc["input_size"],
            input_channels=doc["input_channels"],
        )
        kernels = [
            np.frombuffer(bytes.fromhex(k["f64hex"]), dtype="<f8").reshape(k["shape"]).copy()
            for k in doc["kernels"]
        ]
        return cls(spec, kernels)


def _init_kernels(spec: BackboneSpec, rng):
    kernels = []
    channels = spec.input_channels
    for filters, kernel, _ in spec.conv_blocks:
        fan_in = kernel * kernel * channels
        limit = np.sqrt(6.0 / fan_in)
        kernels.append(rng.uniform(-limit, limit, size=(kernel, kernel, channels, filters)))
        channels = filters
    return kernels


def train_builtin_backbone(
    images, labels, num_classes: int, spec: BackboneSpec = BackboneSpec(), cfg: TrainConfig = TrainConfig(epochs=3)
) -> BuiltinCnnBackbone:
    """Trains the conv stack plus a throwaway softmax head, returns the frozen stack."""
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=int)
    if images.ndim != 4 or len(images) == 0:
        raise ValueError("need a nonempty (N, H, W, C) image batch")
    if len(images) != len(labels):
        raise ValueError("images and labels differ in length")
    rng = np.random.default_rng(cfg.seed)
    backbone = BuiltinCnnBackbone(spec, _init_kernels(spec, rng))
    head = init_network(
        [LayerSpec(backbone.feature_dim, num_classes, "softmax")], seed=cfg.seed + 1
    )
    head_velocity = None
    kernel_velocity = [np.zeros_like(k) for k in backbone.kernels]
    for _ in range(cfg.epochs):
        order = rng.permutation(len(images))
        for start in range(0, len(images), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            x = images[idx]
            pooled, caches = backbone._forward(x)
            feats = pooled.reshape(len(x), -1)
            _, head_grads, d_feats = _loss_and_grads(head, feats, labels[idx])
            head_velocity = sgd_step(head, head_grads, cfg, head_velocity)
            grad = d_feats.reshape(pooled.shape)
            for block_idx in reversed(range(len(backbone.kernels))):
                block_input, z, a, pool = caches[block_idx]
                grad = maxpool2d_backward_batch(a, pool, grad)
                grad = grad * (z > 0)
                grad, d_kernels = conv2d_backward_batch(
                    block_input, backbone.kernels[block_idx], 1, grad
                )
                v = d_kernels + cfg.momentum * kernel_velocity[block_idx]
                backbone.kernels[block_idx] -= cfg.learning_rate * v
                kernel_velocity[block_idx] = v
    return backbone
