"""Minimal dense network engine: forward, backprop, SGD, freezing.

Float64 throughout so analytic gradients can be checked tightly against
finite differences. Layers are affine maps with relu / softmax / identity
activations; softmax is only valid on the final layer. A frozen layer
receives zero gradients and is never touched by the optimizer.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LayerSpec",
    "NetworkModel",
    "TrainConfig",
    "mlp",
    "relu",
    "softmax",
    "cross_entropy",
    "dense_forward",
    "predict_logits",
    "predict_proba",
    "predict_classes",
    "backward_gradients",
    "sgd_step",
    "train",
    "count_connections",
    "save_model",
    "load_model",
]

ACTIVATIONS = ("relu", "softmax", "identity")
LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class LayerSpec:
    input_dim: int
    output_dim: int
    activation: str = "identity"
    frozen: bool = False

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("layer dimensions must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


class NetworkModel:
    """Layer specs plus their weight matrices (output_dim x input_dim) and biases."""

    def __init__(self, layers, weights, biases):
        layers = list(layers)
        if not layers:
            raise ValueError("a network needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.output_dim != b.input_dim:
                raise ValueError(
                    f"layer dims incompatible: {a.output_dim} feeds {b.input_dim}"
                )
        for spec in layers[:-1]:
            if spec.activation == "softmax":
                raise ValueError("softmax is only supported on the final layer")
        if len(weights) != len(layers) or len(biases) != len(layers):
            raise ValueError("need one weight matrix and bias vector per layer")
        for spec, W, b in zip(layers, weights, biases):
            if W.shape != (spec.output_dim, spec.input_dim) or b.shape != (spec.output_dim,):
                raise ValueError(f"parameter shapes do not match spec {spec}")
        self.layers = layers
        self.weights = [np.asarray(W, dtype=np.float64) for W in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].output_dim

    def clone(self) -> "NetworkModel":
        return NetworkModel(
            list(self.layers),
            [W.copy() for W in self.weights],
            [b.copy() for b in self.biases],
        )

    def freeze(self) -> "NetworkModel":
        """Mark every layer frozen (in place) and return self."""
        self.layers = [
            LayerSpec(s.input_dim, s.output_dim, s.activation, True) for s in self.layers
        ]
        return self

    def parameter_hash(self) -> str:
        digest = hashlib.sha256()
        for W, b in zip(self.weights, self.biases):
            digest.update(W.tobytes())
            digest.update(b.tobytes())
        return digest.hexdigest()

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(W)) for W in self.weights) and all(
            np.all(np.isfinite(b)) for b in self.biases
        )


def init_network(layer_specs, seed=0) -> NetworkModel:
    """He-style uniform fan-in initialization, biases at zero."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for spec in layer_specs:
        limit = np.sqrt(6.0 / spec.input_dim)
        weights.append(rng.uniform(-limit, limit, size=(spec.output_dim, spec.input_dim)))
        biases.append(np.zeros(spec.output_dim))
    return NetworkModel(list(layer_specs), weights, biases)


def mlp(input_dim, hidden_widths, num_classes, seed=0) -> NetworkModel:
    """ReLU-hidden MLP with a softmax output layer."""
    dims = [input_dim] + list(hidden_widths) + [num_classes]
    specs = [
        LayerSpec(dims[i], dims[i + 1], "relu") for i in range(len(dims) - 2)
    ] + [LayerSpec(dims[-2], dims[-1], "softmax")]
    return init_network(specs, seed=seed)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def relu(x):
    return np.maximum(0.0, x)


def softmax(logits) -> np.ndarray:
    """Stable softmax over the last axis."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.size == 0:
        raise ValueError("softmax of empty input")
    if np.any(np.isnan(logits)):
        raise ValueError("softmax input contains NaN")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exps = np.exp(shifted)
    return exps / exps.sum(axis=-1, keepdims=True)


def cross_entropy(predicted, target_class: int, log_floor: float = LOG_FLOOR) -> float:
    predicted = np.asarray(predicted, dtype=np.float64)
    if predicted.ndim != 1:
        raise ValueError("cross_entropy expects a 1-D probability vector")
    if abs(predicted.sum() - 1.0) > 1e-6:
        raise ValueError(f"probabilities sum to {predicted.sum()}, not 1")
    if not 0 <= target_class < len(predicted):
        raise ValueError(f"target class {target_class} out of range")
    return -float(np.log(max(predicted[target_class], log_floor)))


def _activate(name, z):
    if name == "relu":
        return relu(z)
    if name == "softmax":
        return softmax(z)
    return z


def _forward_all(model: NetworkModel, x: np.ndarray):
    """Returns (pre-activations per layer, activations with input at [0])."""
    acts = [x]
    zs = []
    for spec, W, b in zip(model.layers, model.weights, model.biases):
        z = acts[-1] @ W.T + b
        zs.append(z)
        acts.append(_activate(spec.activation, z))
    return zs, acts


def _check_input(model, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.input_dim:
        raise ValueError(f"input dim {x.shape[-1]} != model input dim {model.input_dim}")
    if x.ndim not in (1, 2):
        raise ValueError("input must be a vector or a batch of vectors")
    return x


def dense_forward(model: NetworkModel, x):
    """All layer activations, input first and final output last."""
    x = _check_input(model, x)
    _, acts = _forward_all(model, x)
    return acts


def predict_logits(model: NetworkModel, x) -> np.ndarray:
    """Forward pass with the final softmax skipped (branch output for fusion)."""
    x = _check_input(model, x)
    zs, acts = _forward_all(model, x)
    return zs[-1] if model.layers[-1].activation == "softmax" else acts[-1]


def predict_proba(model: NetworkModel, x) -> np.ndarray:
    return softmax(predict_logits(model, x))


def predict_classes(model: NetworkModel, x) -> np.ndarray:
    return np.argmax(predict_logits(model, x), axis=-1)


def _one_hot(targets, num_classes):
    out = np.zeros((len(targets), num_classes))
    out[np.arange(len(targets)), targets] = 1.0
    return out


def _loss_and_grads(model: NetworkModel, x, targets):
    """Mean cross-entropy over the batch and per-layer (dW, db) gradients.

    Also returns the gradient w.r.t. the input batch so convolutional
    feature extractors can chain through a dense head.
    """
    x2 = x[None, :] if x.ndim == 1 else x
    targets = np.atleast_1d(np.asarray(targets, dtype=int))
    if np.any(targets < 0) or np.any(targets >= model.output_dim):
        raise ValueError("target class out of range")
    batch = x2.shape[0]
    zs, acts = _forward_all(model, x2)

    last = model.layers[-1].activation
    onehot = _one_hot(targets, model.output_dim)
    if last == "softmax":
        probs = acts[-1]
        g = (probs - onehot) / batch  # gradient w.r.t. final pre-activation
    else:
        probs = softmax(acts[-1])
        g = (probs - onehot) / batch
        if last == "relu":
            g = g * (zs[-1] > 0)

    floored = np.maximum(probs[np.arange(batch), targets], LOG_FLOOR)
    loss = float(-np.log(floored).mean())

    grads = []
    for i in reversed(range(len(model.layers))):
        if model.layers[i].frozen:
            grads.append((np.zeros_like(model.weights[i]), np.zeros_like(model.biases[i])))
        else:
            grads.append((g.T @ acts[i], g.sum(axis=0)))
        g = g @ model.weights[i]
        if i > 0 and model.layers[i - 1].activation == "relu":
            g = g * (zs[i - 1] > 0)
    grads.reverse()
    input_grad = g[0] if x.ndim == 1 else g
    return loss, grads, input_grad


def backward_gradients(model: NetworkModel, x, targets, return_input_grad=False):
    """Gradients of cross-entropy(softmax) w.r.t. every non-frozen parameter.

    Returns a list of (dW, db) per layer; frozen layers yield zeros. For a
    batch the gradient is of the mean loss.
    """
    x = _check_input(model, x)
    _, grads, input_grad = _loss_and_grads(model, x, targets)
    if return_input_grad:
        return grads, input_grad
    return grads


def sgd_step(model: NetworkModel, grads, cfg: TrainConfig, velocity=None):
    """One momentum-SGD update in place: w -= lr * (g + momentum * v).

    Returns the updated velocity state (pass it back on the next step).
    Frozen layers are skipped entirely, leaving their bytes untouched.
    """
    if len(grads) != len(model.layers):
        raise ValueError("gradient list does not match layer count")
    if velocity is None:
        velocity = [
            (np.zeros_like(W), np.zeros_like(b))
            for W, b in zip(model.weights, model.biases)
        ]
    for i, (spec, (dW, db)) in enumerate(zip(model.layers, grads)):
        if dW.shape != model.weights[i].shape or db.shape != model.biases[i].shape:
            raise ValueError(f"gradient shapes do not match layer {i}")
        if spec.frozen:
            continue
        vW = dW + cfg.momentum * velocity[i][0]
        vb = db + cfg.momentum * velocity[i][1]
        model.weights[i] -= cfg.learning_rate * vW
        model.biases[i] -= cfg.learning_rate * vb
        velocity[i] = (vW, vb)
    return velocity


def train(model: NetworkModel, features, labels, cfg: TrainConfig):
    """Shuffled minibatch SGD; deterministic given cfg.seed.

    Mutates the model in place and returns the per-epoch mean training loss
    (length cfg.epochs).
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=int)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("training set must be a nonempty 2-D array")
    if len(X) != len(y):
        raise ValueError("features and labels differ in length")
    if X.shape[1] != model.input_dim:
        raise ValueError(f"feature dim {X.shape[1]} != model input dim {model.input_dim}")
    rng = np.random.default_rng(cfg.seed)
    velocity = None
    history = []
    for _ in range(cfg.epochs):
        order = rng.permutation(len(X))
        batch_losses = []
        for start in range(0, len(X), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, grads, _ = _loss_and_grads(model, X[idx], y[idx])
            velocity = sgd_step(model, grads, cfg, velocity)
            batch_losses.append(loss)
        history.append(float(np.mean(batch_losses)))
        if not model.all_finite():
            raise FloatingPointError(
                "parameters diverged to non-finite values; lower the learning rate"
            )
    return history


def count_connections(input_dim: int, hidden_widths, output_dim: int) -> int:
    """Weight count between consecutive layers, biases excluded."""
    dims = [input_dim] + list(hidden_widths) + [output_dim]
    if any(d < 1 for d in dims):
        raise ValueError("all dimensions must be >= 1")
    return int(sum(a * b for a, b in zip(dims, dims[1:])))


# --- serialization: JSON with float64 bit patterns, round-trips exactly ---

FORMAT_VERSION = "scenefusion-network/1"


def _encode_array(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape), "f64hex": arr.astype("<f8").tobytes().hex()}


def _decode_array(doc: dict) -> np.ndarray:
    flat = np.frombuffer(bytes.fromhex(doc["f64hex"]), dtype="<f8")
    return flat.reshape(doc["shape"]).copy()


def model_to_dict(model: NetworkModel) -> dict:
    return {
        "format": FORMAT_VERSION,
        "layers": [
            {
                "input_dim": s.input_dim,
                "output_dim": s.output_dim,
                "activation": s.activation,
                "frozen": s.frozen,
                "weights": _encode_array(W),
                "biases": _encode_array(b),
            }
            for s, W, b in zip(model.layers, model.weights, model.biases)
        ],
    }


def model_from_dict(doc: dict) -> NetworkModel:
    if doc.get("format") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format {doc.get('format')!r}")
    specs, weights, biases = [], [], []
    for layer in doc["layers"]:
        specs.append(
            LayerSpec(
                layer["input_dim"],
                layer["output_dim"],
                layer["activation"],
                layer["frozen"],
            )
        )
        weights.append(_decode_array(layer["weights"]))
        biases.append(_decode_array(layer["biases"]))
    return NetworkModel(specs, weights, biases)


def save_model(model: NetworkModel, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1, sort_keys=True)


def load_model(path) -> NetworkModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
