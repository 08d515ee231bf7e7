import numpy as np
import pytest

from scenefusion.convnet import (
    BackboneSpec,
    BuiltinCnnBackbone,
    conv2d,
    conv2d_backward_batch,
    conv2d_batch,
    maxpool2d,
    maxpool2d_backward_batch,
    maxpool2d_batch,
    train_builtin_backbone,
)
from scenefusion.network import LayerSpec, TrainConfig, _loss_and_grads, init_network

from oracles import conv2d_loops, finite_difference, maxpool2d_loops


class TestConv2d:
    def test_identity_kernel(self):
        rng = np.random.default_rng(0)
        image = rng.normal(size=(5, 5, 1))
        kernels = np.ones((1, 1, 1, 1))
        np.testing.assert_array_equal(conv2d(image, kernels), image)

    def test_all_ones_kernel_on_constant_image(self):
        image = np.full((6, 6, 1), 2.5)
        kernels = np.ones((3, 3, 1, 1))
        out = conv2d(image, kernels)
        assert out.shape == (4, 4, 1)
        np.testing.assert_allclose(out, 9 * 2.5, atol=1e-12)

    def test_matches_six_loop_oracle(self):
        rng = np.random.default_rng(1)
        image = rng.normal(size=(8, 8, 3))
        kernels = rng.normal(size=(3, 3, 3, 2))
        np.testing.assert_allclose(conv2d(image, kernels), conv2d_loops(image, kernels), atol=1e-12)

    def test_stride_two_matches_oracle(self):
        rng = np.random.default_rng(2)
        image = rng.normal(size=(9, 9, 2))
        kernels = rng.normal(size=(3, 3, 2, 4))
        got = conv2d(image, kernels, stride=2)
        want = conv2d_loops(image, kernels, stride=2)
        assert got.shape == (4, 4, 4)
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_linear_in_input(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(6, 6, 2))
        b = rng.normal(size=(6, 6, 2))
        kernels = rng.normal(size=(3, 3, 2, 3))
        lhs = conv2d(2.0 * a + 0.5 * b, kernels)
        rhs = 2.0 * conv2d(a, kernels) + 0.5 * conv2d(b, kernels)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)

    def test_kernel_larger_than_input_rejected(self):
        with pytest.raises(ValueError):
            conv2d(np.zeros((2, 2, 1)), np.zeros((3, 3, 1, 1)))

    def test_channel_mismatch_rejected(self):
        with pytest.raises(ValueError):
            conv2d(np.zeros((4, 4, 2)), np.zeros((3, 3, 3, 1)))


class TestMaxPool2d:
    def test_constant_image_shrinks(self):
        out = maxpool2d(np.full((4, 4, 2), 7.0), 2)
        assert out.shape == (2, 2, 2)
        np.testing.assert_array_equal(out, np.full((2, 2, 2), 7.0))

    def test_two_by_two(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(2, 2, 1)
        np.testing.assert_array_equal(maxpool2d(x, 2), [[[4.0]]])

    def test_never_exceeds_channel_max(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(8, 8, 3))
        out = maxpool2d(x, 2)
        for c in range(3):
            assert out[:, :, c].max() <= x[:, :, c].max()

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(6, 6, 2))
        np.testing.assert_array_equal(maxpool2d(x, 3), maxpool2d_loops(x, 3))

    def test_non_divisible_rejected(self):
        with pytest.raises(ValueError):
            maxpool2d(np.zeros((5, 5, 1)), 2)


def conv_stack_loss(kernels_flat, shapes, image, target, head, pool=2):
    """Forward conv -> relu -> maxpool -> dense softmax cross-entropy."""
    offset = 0
    kernel_list = []
    for shape in shapes:
        size = int(np.prod(shape))
        kernel_list.append(kernels_flat[offset : offset + size].reshape(shape))
        offset += size
    x = image[None]
    for kernels in kernel_list:
        x = np.maximum(0.0, conv2d_batch(x, kernels))
        x = maxpool2d_batch(x, pool)
    feats = x.reshape(1, -1)
    loss, _, _ = _loss_and_grads(head, feats, np.array([target]))
    return loss


class TestConvPoolGradients:
    def test_stack_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(6)
        image = rng.normal(size=(10, 10, 2))
        shapes = [(3, 3, 2, 3)]
        kernels = rng.normal(size=shapes[0]) * 0.5
        head = init_network([LayerSpec(4 * 4 * 3, 3, "softmax")], seed=1)
        target = 2

        # analytic: forward with caches, backprop through dense, pool, relu, conv
        x = image[None]
        z = conv2d_batch(x, kernels)
        a = np.maximum(0.0, z)
        pooled = maxpool2d_batch(a, 2)
        feats = pooled.reshape(1, -1)
        _, _, d_feats = _loss_and_grads(head, feats, np.array([target]))
        grad = d_feats.reshape(pooled.shape)
        grad = maxpool2d_backward_batch(a, 2, grad)
        grad = grad * (z > 0)
        d_image, d_kernels = conv2d_backward_batch(x, kernels, 1, grad)

        fd_kernels = finite_difference(
            lambda theta: conv_stack_loss(theta, shapes, image, target, head),
            kernels.ravel().copy(),
            h=1e-5,
        )
        np.testing.assert_allclose(d_kernels.ravel(), fd_kernels, rtol=1e-4, atol=1e-7)

        def loss_of_image(flat):
            return conv_stack_loss(kernels.ravel(), shapes, flat.reshape(image.shape), target, head)

        fd_image = finite_difference(loss_of_image, image.ravel().copy(), h=1e-5)
        np.testing.assert_allclose(d_image.ravel(), fd_image, rtol=1e-4, atol=1e-7)

    def test_two_block_kernel_gradients(self):
        rng = np.random.default_rng(7)
        image = rng.normal(size=(12, 12, 1))
        spec = BackboneSpec(conv_blocks=((2, 3, 2), (3, 2, 2)), input_size=12, input_channels=1)
        backbone = BuiltinCnnBackbone(
            spec, [rng.normal(size=(3, 3, 1, 2)) * 0.5, rng.normal(size=(2, 2, 2, 3)) * 0.5]
        )
        head = init_network([LayerSpec(backbone.feature_dim, 2, "softmax")], seed=2)
        target = 1

        pooled, caches = backbone._forward(image[None])
        _, _, d_feats = _loss_and_grads(head, pooled.reshape(1, -1), np.array([target]))
        grad = d_feats.reshape(pooled.shape)
        analytic = []
        for idx in reversed(range(2)):
            block_input, z, a, pool = caches[idx]
            grad = maxpool2d_backward_batch(a, pool, grad)
            grad = grad * (z > 0)
            grad, d_k = conv2d_backward_batch(block_input, backbone.kernels[idx], 1, grad)
            analytic.append(d_k)
        analytic.reverse()

        for idx in range(2):
            shape = backbone.kernels[idx].shape

            def loss_at(theta, idx=idx, shape=shape):
                trial = BuiltinCnnBackbone(
                    spec, [k.copy() for k in backbone.kernels]
                )
                trial.kernels[idx] = theta.reshape(shape)
                pooled, _ = trial._forward(image[None])
                loss, _, _ = _loss_and_grads(head, pooled.reshape(1, -1), np.array([target]))
                return loss

            fd = finite_difference(loss_at, backbone.kernels[idx].ravel().copy(), h=1e-5)
            np.testing.assert_allclose(analytic[idx].ravel(), fd, rtol=1e-4, atol=1e-7)


class TestBackboneSpec:
    def test_default_feature_dim_hand_computed(self):
        # 128 -(5)-> 124 -(/2)-> 62 -(3)-> 60 -(/2)-> 30 -(3)-> 28 -(/2)-> 14
        assert BackboneSpec().builtin_feature_dim() == 14 * 14 * 32

    def test_non_divisible_stack_rejected(self):
        with pytest.raises(ValueError):
            BackboneSpec(conv_blocks=((8, 3, 2), (16, 3, 2)), input_size=128)

    def test_imported_requires_feature_dim(self):
        with pytest.raises(ValueError):
            BackboneSpec(kind="imported_features")

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            BackboneSpec(kind="vgg16")


def colour_toy_images(n_per_class=12, size=16, seed=0):
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for cls, base in enumerate([(0.9, 0.1, 0.1), (0.1, 0.1, 0.9)]):
        for _ in range(n_per_class):
            img = np.tile(np.array(base), (size, size, 1))
            img += rng.normal(scale=0.05, size=img.shape)
            images.append(np.clip(img, 0, 1))
            labels.append(cls)
    return np.array(images), np.array(labels)


class TestBuiltinBackboneTraining:
    SPEC = BackboneSpec(conv_blocks=((4, 5, 2), (6, 3, 2)), input_size=16)

    def test_feature_dim_matches_analytic(self):
        # 16 -(5)-> 12 -(/2)-> 6 -(3)-> 4 -(/2)-> 2 ; 2*2*6 = 24
        images, labels = colour_toy_images()
        backbone = train_builtin_backbone(images, labels, 2, self.SPEC, TrainConfig(epochs=1))
        assert backbone.feature_dim == 24
        assert backbone.features(images[0]).shape == (24,)

    def test_frozen_features_deterministic(self):
        images, labels = colour_toy_images()
        backbone = train_builtin_backbone(images, labels, 2, self.SPEC, TrainConfig(epochs=1))
        before = backbone.parameter_hash()
        f1 = backbone.features(images[:5])
        f2 = backbone.features(images[:5])
        np.testing.assert_array_equal(f1, f2)
        assert backbone.parameter_hash() == before

    def test_training_is_seeded(self):
        images, labels = colour_toy_images()
        cfg = TrainConfig(epochs=2, seed=5)
        b1 = train_builtin_backbone(images, labels, 2, self.SPEC, cfg)
        b2 = train_builtin_backbone(images, labels, 2, self.SPEC, cfg)
        assert b1.parameter_hash() == b2.parameter_hash()

    def test_features_separate_colour_classes(self):
        images, labels = colour_toy_images(n_per_class=16)
        backbone = train_builtin_backbone(
            images, labels, 2, self.SPEC, TrainConfig(epochs=3, seed=1)
        )
        feats = backbone.features(images)
        mean0 = feats[labels == 0].mean(axis=0)
        mean1 = feats[labels == 1].mean(axis=0)
        assert np.linalg.norm(mean0 - mean1) > 1.0

    def test_serialization_round_trip(self):
        images, labels = colour_toy_images()
        backbone = train_builtin_backbone(images, labels, 2, self.SPEC, TrainConfig(epochs=1))
        restored = BuiltinCnnBackbone.from_dict(backbone.to_dict())
        assert restored.parameter_hash() == backbone.parameter_hash()
        np.testing.assert_array_equal(
            restored.features(images[0]), backbone.features(images[0])
        )
