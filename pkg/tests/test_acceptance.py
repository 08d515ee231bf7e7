"""Acceptance suite: one test per release criterion, each printing PASS on exit.

Budgets are asserted with wall-clock checks; empirical thresholds use the
synthetic paired dataset at desk scale.
"""

import hashlib
import time
from pathlib import Path

import numpy as np
import pytest

from scenefusion.audio_features import AudioClip, MfccConfig, clip_features, dct_ii, mfcc_frame, power_spectrum
from scenefusion.audio_branch import EvoConfig, FitnessConfig, GenomeBounds, evolve_topology
from scenefusion.cli import main as cli_main
from scenefusion.convnet import (
    BackboneSpec,
    BuiltinCnnBackbone,
    conv2d_batch,
    conv2d_backward_batch,
    maxpool2d_backward_batch,
    maxpool2d_batch,
    train_builtin_backbone,
)
from scenefusion.datasets import SynthConfig, generate_synthetic, load_manifest_dataset, mfcc_matrix
from scenefusion.evaluation import confusion_matrix, evaluate, kfold_split
from scenefusion.experiments import COMPARISON_MODELS, ComparisonConfig, run_comparison
from scenefusion.network import (
    LayerSpec,
    TrainConfig,
    _loss_and_grads,
    backward_gradients,
    count_connections,
    init_network,
    mlp,
    predict_proba,
)

from oracles import (
    dct_ii_loops,
    dft_power_loops,
    finite_difference,
    mfcc_frame_loops,
)


def run_cli(*argv):
    return cli_main([str(a) for a in argv])


def dir_digest(root):
    digest = hashlib.sha256()
    for path in sorted(Path(root).rglob("*")):
        if path.is_file():
            digest.update(str(path.relative_to(root)).encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


def test_mfcc_shape_fidelity():
    start = time.monotonic()
    rng = np.random.default_rng(0)
    cfg = MfccConfig()
    for _ in range(5):
        clip = AudioClip(rng.uniform(-1, 1, size=16000), 16000)
        feats = clip_features(clip, cfg)
        assert feats.shape == (104,)
        assert np.all(np.isfinite(feats))
    elapsed = time.monotonic() - start
    assert elapsed < 1.0, f"took {elapsed:.2f}s"
    print(f"\nPASS: MFCC shape fidelity (104 values per 1 s clip, {elapsed:.2f}s)")


def test_dsp_oracles_on_100_random_inputs():
    start = time.monotonic()
    rng = np.random.default_rng(1)

    for _ in range(100):
        x = rng.normal(size=int(rng.integers(1, 32)))
        np.testing.assert_allclose(dct_ii(x), dct_ii_loops(x), atol=1e-6)

    for _ in range(100):
        frame = rng.uniform(-1, 1, size=int(rng.integers(10, 96)))
        np.testing.assert_allclose(
            power_spectrum(frame, 128), dft_power_loops(frame, 128), atol=1e-6
        )

    small = MfccConfig(
        window_seconds=0.025,
        windows_per_clip=8,
        coefficients_per_window=8,
        mel_filters=10,
        fft_size=256,
        sample_rate=8000,
    )
    for _ in range(100):
        frame = rng.uniform(-1, 1, size=small.frame_length)
        got = mfcc_frame(frame, small)
        want = mfcc_frame_loops(frame, 8000, 10, 8, 256, 1e-10)
        np.testing.assert_allclose(got, want, atol=1e-6)

    elapsed = time.monotonic() - start
    assert elapsed < 10.0, f"took {elapsed:.2f}s"
    print(f"\nPASS: DSP oracles (dct/power/mfcc vs brute force, 100 inputs each, {elapsed:.1f}s)")


def test_gradient_correctness():
    start = time.monotonic()
    rng = np.random.default_rng(2)

    # dense nets: 1, 2 and 3 layers at random small shapes
    for depth in (1, 2, 3):
        dims = [int(d) for d in rng.integers(3, 12, size=depth + 1)]
        model = mlp(dims[0], dims[1:-1], dims[-1], seed=int(rng.integers(1 << 30)))
        x = rng.normal(size=dims[0])
        target = int(rng.integers(dims[-1]))
        grads = backward_gradients(model, x, target)
        for li in range(len(model.layers)):
            for kind in ("W", "b"):
                param = model.weights[li] if kind == "W" else model.biases[li]

                def loss_at(theta, li=li, kind=kind, shape=param.shape):
                    trial = model.clone()
                    if kind == "W":
                        trial.weights[li] = theta.reshape(shape)
                    else:
                        trial.biases[li] = theta.reshape(shape)
                    return -np.log(max(predict_proba(trial, x)[target], 1e-300))

                fd = finite_difference(loss_at, param.ravel().copy(), h=1e-5)
                analytic = grads[li][0 if kind == "W" else 1].ravel()
                np.testing.assert_allclose(analytic, fd, rtol=1e-4, atol=1e-7)

    # conv/pool stack: conv -> relu -> maxpool -> dense softmax
    image = rng.normal(size=(10, 10, 2))
    kernels = rng.normal(size=(3, 3, 2, 3)) * 0.5
    head = init_network([LayerSpec(4 * 4 * 3, 3, "softmax")], seed=3)
    target = 1

    x = image[None]
    z = conv2d_batch(x, kernels)
    a = np.maximum(0.0, z)
    pooled = maxpool2d_batch(a, 2)
    _, _, d_feats = _loss_and_grads(head, pooled.reshape(1, -1), np.array([target]))
    grad = maxpool2d_backward_batch(a, 2, d_feats.reshape(pooled.shape))
    grad = grad * (z > 0)
    d_image, d_kernels = conv2d_backward_batch(x, kernels, 1, grad)

    def stack_loss(kflat):
        z = conv2d_batch(image[None], kflat.reshape(kernels.shape))
        pooled = maxpool2d_batch(np.maximum(0.0, z), 2)
        loss, _, _ = _loss_and_grads(head, pooled.reshape(1, -1), np.array([target]))
        return loss

    fd_kernels = finite_difference(stack_loss, kernels.ravel().copy(), h=1e-5)
    np.testing.assert_allclose(d_kernels.ravel(), fd_kernels, rtol=1e-4, atol=1e-7)

    def image_loss(iflat):
        z = conv2d_batch(iflat.reshape(image.shape)[None], kernels)
        pooled = maxpool2d_batch(np.maximum(0.0, z), 2)
        loss, _, _ = _loss_and_grads(head, pooled.reshape(1, -1), np.array([target]))
        return loss

    fd_image = finite_difference(image_loss, image.ravel().copy(), h=1e-5)
    np.testing.assert_allclose(d_image.ravel(), fd_image, rtol=1e-4, atol=1e-7)

    elapsed = time.monotonic() - start
    assert elapsed < 30.0, f"took {elapsed:.2f}s"
    print(f"\nPASS: gradient correctness (dense + conv/pool vs finite differences, {elapsed:.1f}s)")


def test_connection_arithmetic():
    assert count_connections(104, [977, 365, 703, 41], 8) == 743_959
    assert count_connections(104, [934, 594, 474], 8) == 937_280
    print("\nPASS: connection arithmetic (743,959 and 937,280, exact)")


@pytest.fixture(scope="module")
def audio600(tmp_path_factory):
    out = tmp_path_factory.mktemp("audio600")
    manifest = generate_synthetic(
        SynthConfig(num_classes=3, samples_per_class=200, ambiguity=0.0, seed=5, image_size=32),
        out,
    )
    dataset = load_manifest_dataset(manifest, image_size=32)
    return mfcc_matrix(dataset), dataset.labels


def test_evolution_sanity(audio600):
    start = time.monotonic()
    features, labels = audio600
    evo = EvoConfig(
        population=20,
        generations=10,
        runs=1,
        elitism=1,
        seed=7,
        bounds=GenomeBounds(min_width=8, max_width=64, max_layers=3),
    )
    fitness = FitnessConfig(
        folds=3,
        final_folds=3,
        train_cfg=TrainConfig(epochs=12, learning_rate=0.02),
    )
    result = evolve_topology(features, labels, evo, fitness)
    best_curve = [row[2] for row in result.history]
    assert len(best_curve) == 11
    assert all(b >= a for a, b in zip(best_curve, best_curve[1:])), best_curve
    assert result.best.accuracy >= 0.90, result.best
    elapsed = time.monotonic() - start
    assert elapsed < 600.0, f"took {elapsed:.0f}s"
    print(
        f"\nPASS: evolution sanity (pop 20, gen 10, monotone best, "
        f"final 3-fold accuracy {result.best.accuracy:.3f}, {elapsed:.0f}s)"
    )


def test_fusion_dominance_alpha_one(tmp_path):
    start = time.monotonic()
    margins = []
    for seed in (0, 1, 2):
        manifest = generate_synthetic(
            SynthConfig(num_classes=3, samples_per_class=100, ambiguity=1.0, seed=seed),
            tmp_path / f"seed{seed}",
        )
        dataset = load_manifest_dataset(manifest, image_size=64)
        audio_X = mfcc_matrix(dataset)
        backbone = train_builtin_backbone(
            dataset.images,
            dataset.labels,
            3,
            BackboneSpec(input_size=64),
            TrainConfig(epochs=3, batch_size=16, seed=seed),
        )
        image_X = backbone.features(dataset.images)
        reports = run_comparison(audio_X, image_X, dataset.labels, 3, ComparisonConfig(seed=seed))
        assert set(reports) == set(COMPARISON_MODELS)  # every baseline is in the report
        fused = reports["fusion"].mean_accuracy
        single = max(reports["audio"].mean_accuracy, reports["image"].mean_accuracy)
        margins.append(fused - single)
        assert fused >= single + 0.05, (
            f"seed {seed}: fused {fused:.3f} vs best single {single:.3f}"
        )
    elapsed = time.monotonic() - start
    assert elapsed < 300.0, f"took {elapsed:.0f}s"
    print(
        f"\nPASS: fusion dominance at ambiguity 1.0 "
        f"(margins {[f'{m:+.2f}' for m in margins]}, {elapsed:.0f}s)"
    )


def test_harness_invariants():
    start = time.monotonic()
    rng = np.random.default_rng(9)
    for _ in range(1000):
        k = int(rng.integers(2, 20))
        n = int(rng.integers(k, 400))
        plan = kfold_split(n, k, int(rng.integers(1 << 30)))
        assert set(plan.assignments) == set(range(k))
        sizes = np.bincount(plan.assignments, minlength=k)
        assert sizes.sum() == n
        assert sizes.max() - sizes.min() <= 1

    class Oracle:
        def fit(self, X, y):
            return self

        def predict(self, X):
            return np.asarray(X[:, 0], dtype=int)

    y = np.repeat(np.arange(4), 25)
    X = y[:, None].astype(float)
    report = evaluate(lambda fold: Oracle(), X, y, kfold_split(100, 10, 0))
    assert report.mean_accuracy == 1.0
    np.testing.assert_array_equal(report.confusion, np.diag([25, 25, 25, 25]))
    elapsed = time.monotonic() - start
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    print(f"\nPASS: harness invariants (1000 fold plans + oracle predictor, {elapsed:.1f}s)")


def test_cli_determinism(tmp_path):
    # synth
    synth_args = ["synth", "--classes", 3, "--per-class", 10, "--ambiguity", 0.5,
                  "--image-size", 32, "--seed", 13]
    assert run_cli(*synth_args, "--out", tmp_path / "synth_a") == 0
    assert run_cli(*synth_args, "--out", tmp_path / "synth_b") == 0
    assert dir_digest(tmp_path / "synth_a") == dir_digest(tmp_path / "synth_b")

    manifest = tmp_path / "synth_a/manifest.jsonl"

    # evolve-audio
    evolve_args = [
        "evolve-audio", "--manifest", manifest, "--population", 4, "--generations", 2,
        "--runs", 1, "--min-width", 4, "--max-width", 16, "--max-layers", 2,
        "--fitness-folds", 2, "--final-folds", 3, "--fitness-epochs", 6, "--seed", 3,
    ]
    assert run_cli(*evolve_args, "--out", tmp_path / "evo_a") == 0
    assert run_cli(*evolve_args, "--out", tmp_path / "evo_b") == 0
    assert dir_digest(tmp_path / "evo_a") == dir_digest(tmp_path / "evo_b")

    # train-fusion (needs branch models once)
    assert run_cli(
        "train-audio", "--manifest", manifest, "--hidden", "8", "--folds", 2,
        "--epochs", 10, "--out", tmp_path / "audio",
    ) == 0
    assert run_cli(
        "train-image", "--manifest", manifest, "--widths", "4", "--folds", 2,
        "--image-size", 32, "--backbone-epochs", 1, "--out", tmp_path / "image",
    ) == 0
    fusion_args = [
        "train-fusion", "--manifest", manifest,
        "--audio-model", tmp_path / "audio/audio_model.json",
        "--image-model", tmp_path / "image/image_model.json",
        "--widths", "4,8", "--folds", 2, "--seed", 4,
    ]
    assert run_cli(*fusion_args, "--out", tmp_path / "fus_a") == 0
    assert run_cli(*fusion_args, "--out", tmp_path / "fus_b") == 0
    assert dir_digest(tmp_path / "fus_a") == dir_digest(tmp_path / "fus_b")
    print("\nPASS: determinism (synth, evolve-audio, train-fusion byte-identical reruns)")
