import numpy as np
import pytest

from scenefusion.audio_features import MfccConfig
from scenefusion.convnet import BackboneSpec, BuiltinCnnBackbone
from scenefusion.datasets import SynthConfig, generate_synthetic, load_manifest_dataset
from scenefusion.evaluation import MlpClassifier
from scenefusion.experiments import (
    COMPARISON_MODELS,
    ComparisonConfig,
    FusionArtifact,
    load_fusion_artifact,
    run_comparison,
    run_holdout,
    save_fusion_artifact,
)
from scenefusion.fusion import FusedPairs, build_fusion_model, train_fusion_head
from scenefusion.network import TrainConfig


def paired_blobs(num_classes=3, n_per=30, seed=0):
    rng = np.random.default_rng(seed)
    ca = rng.normal(scale=4.0, size=(num_classes, 8))
    ci = rng.normal(scale=4.0, size=(num_classes, 5))
    y = np.repeat(np.arange(num_classes), n_per)
    audio = np.vstack([rng.normal(loc=ca[c], size=(n_per, 8)) for c in range(num_classes)])
    image = np.vstack([rng.normal(loc=ci[c], size=(n_per, 5)) for c in range(num_classes)])
    return audio, image, y


FAST = ComparisonConfig(
    audio_hidden=(8,),
    image_width=8,
    fusion_width=8,
    folds=3,
    seed=0,
    audio_train=TrainConfig(epochs=15, learning_rate=0.05),
    head_train=TrainConfig(epochs=15, learning_rate=0.05),
    fusion_train=TrainConfig(epochs=20, learning_rate=0.05),
    forest_trees=20,
    forest_depth=6,
)


class TestRunComparison:
    def test_all_models_reported_with_coherent_folds(self):
        audio, image, y = paired_blobs()
        reports = run_comparison(audio, image, y, 3, FAST)
        assert set(reports) == set(COMPARISON_MODELS)
        for name, rep in reports.items():
            assert len(rep.fold_accuracies) == 3
            assert rep.confusion.sum() == len(y)
            assert min(rep.fold_accuracies) <= rep.mean_accuracy <= max(rep.fold_accuracies)

    def test_separable_data_scores_high_everywhere(self):
        audio, image, y = paired_blobs()
        reports = run_comparison(audio, image, y, 3, FAST)
        for name, rep in reports.items():
            assert rep.mean_accuracy >= 0.9, name

    def test_deterministic(self):
        audio, image, y = paired_blobs()
        r1 = run_comparison(audio, image, y, 3, FAST)
        r2 = run_comparison(audio, image, y, 3, FAST)
        for name in COMPARISON_MODELS:
            assert r1[name].fold_accuracies == r2[name].fold_accuracies


def tiny_artifact(tmp_path, seed=0):
    cfg = SynthConfig(num_classes=3, samples_per_class=6, seed=seed, image_size=32)
    manifest = generate_synthetic(cfg, tmp_path / f"data{seed}")
    ds = load_manifest_dataset(manifest, image_size=32)
    from scenefusion.convnet import train_builtin_backbone
    from scenefusion.datasets import mfcc_matrix

    backbone = train_builtin_backbone(
        ds.images, ds.labels, 3, BackboneSpec(input_size=32), TrainConfig(epochs=1)
    )
    audio_X = mfcc_matrix(ds)
    image_X = backbone.features(ds.images)
    quick = TrainConfig(epochs=10, learning_rate=0.05)
    audio_net = MlpClassifier([8], 3, quick, seed=1).fit(audio_X, ds.labels).model
    image_net = MlpClassifier([8], 3, quick, seed=2).fit(image_X, ds.labels).model
    model = build_fusion_model(audio_net, image_net, 8, seed=3)
    pairs = FusedPairs(audio_X, image_X, ds.labels, ds.sample_ids)
    train_fusion_head(model, pairs, quick, seed=4)
    artifact = FusionArtifact(
        fusion=model,
        backbone=backbone,
        backbone_kind="builtin_cnn",
        feature_dim=backbone.feature_dim,
        class_names=ds.class_names,
        mfcc_config=MfccConfig(),
        train_sources=ds.source_ids,
    )
    return artifact, ds


class TestFusionArtifact:
    def test_round_trip_preserves_predictions(self, tmp_path):
        artifact, ds = tiny_artifact(tmp_path)
        path = tmp_path / "fusion_model.json"
        save_fusion_artifact(path, artifact)
        loaded = load_fusion_artifact(path)
        assert loaded.class_names == artifact.class_names
        assert loaded.fusion.branch_hashes() == artifact.fusion.branch_hashes()
        probs_a = artifact.predict_pair(ds.images[0], ds.audio[0], ds.sample_rate)
        probs_b = loaded.predict_pair(ds.images[0], ds.audio[0], ds.sample_rate)
        for key in ("audio", "image", "fused"):
            np.testing.assert_array_equal(probs_a[key], probs_b[key])
            assert abs(probs_a[key].sum() - 1.0) < 1e-9

    def test_run_holdout_on_disjoint_sources(self, tmp_path):
        artifact, _ = tiny_artifact(tmp_path, seed=0)
        unseen_manifest = generate_synthetic(
            SynthConfig(num_classes=3, samples_per_class=4, seed=7, image_size=32),
            tmp_path / "unseen",
        )
        unseen = load_manifest_dataset(unseen_manifest, image_size=32)
        results = run_holdout(artifact, unseen)
        assert set(results) == {"audio", "image", "fusion"}
        for res in results.values():
            assert res.total == 12
            assert res.accuracy == np.trace(res.confusion) / res.confusion.sum()

    def test_run_holdout_rejects_shared_sources(self, tmp_path):
        artifact, ds = tiny_artifact(tmp_path, seed=0)
        with pytest.raises(ValueError, match="shares sources"):
            run_holdout(artifact, ds)

    def test_run_holdout_rejects_class_mismatch(self, tmp_path):
        artifact, _ = tiny_artifact(tmp_path, seed=0)
        other = generate_synthetic(
            SynthConfig(num_classes=4, samples_per_class=2, seed=9, image_size=32),
            tmp_path / "four",
        )
        unseen = load_manifest_dataset(other, image_size=32)
        with pytest.raises(ValueError, match="class list"):
            run_holdout(artifact, unseen)
