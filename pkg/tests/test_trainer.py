"""Training loop, gradients, regularizers, datasets, and initialization."""

import math

import numpy as np
import pytest

import oracles
from koopbound.matcore import RankDeficientError
from koopbound.network import GaussianHead, SmoothLeakyRelu, SoftmaxHead
from koopbound.trainer import (
    Dataset,
    TrainConfig,
    TrainerError,
    build_network,
    classification_accuracy,
    forward,
    gen_error_estimate,
    init_weight,
    load_digits,
    loss_and_grads,
    make_synthetic,
    regularizer_perlayer,
    regularizer_synthetic,
    smooth_leaky_relu,
    smooth_leaky_relu_derivative,
    synthetic_target,
    train,
)


class TestActivation:
    def test_zero_fixed_point(self):
        assert smooth_leaky_relu(0.0) == 0.0

    def test_asymptotes(self):
        # large positive ~ identity, large negative ~ alpha * x
        assert smooth_leaky_relu(50.0, alpha=0.5, mu=0.5) == pytest.approx(50.0)
        assert smooth_leaky_relu(-50.0, alpha=0.5, mu=0.5) == pytest.approx(-25.0)

    def test_derivative_matches_central_difference(self):
        xs = np.linspace(-3, 3, 41)
        for alpha, mu in [(0.5, 0.5), (0.3, 1.0)]:
            num = oracles.central_difference(
                lambda v: float(np.sum(smooth_leaky_relu(v, alpha, mu))), xs.copy()
            )
            ana = smooth_leaky_relu_derivative(xs, alpha, mu)
            assert np.allclose(num, ana, atol=1e-7)


class TestForward:
    def test_matches_straightline_reference(self):
        net = build_network([3, 3, 6], GaussianHead(), seed=4)
        rng = np.random.default_rng(0)
        act = net.layers[0].activation
        for _ in range(10):
            x = rng.standard_normal(3)
            ref = oracles.forward_reference(
                [l.weight for l in net.layers],
                [l.bias for l in net.layers],
                act.alpha,
                act.mu,
                x,
                c_gauss=net.head.c,
            )
            assert forward(net, x) == pytest.approx(ref, rel=1e-12)

    def test_softmax_rows_sum_to_one(self):
        net = build_network([5, 8, 4], SoftmaxHead(), seed=1)
        probs = forward(net, np.random.default_rng(2).standard_normal((7, 5)))
        assert probs.shape == (7, 4)
        assert np.all(probs > 0)
        assert np.allclose(probs.sum(axis=1), 1.0)

    def test_batch_consistent_with_single(self):
        net = build_network([3, 3, 6], GaussianHead(), seed=4)
        xs = np.random.default_rng(3).standard_normal((5, 3))
        batch = forward(net, xs)
        singles = [forward(net, x) for x in xs]
        assert np.allclose(batch, singles)


def _loss_of_weights(net, X, Y, head_loss):
    def fn(layer_idx):
        def inner(w):
            old = net.layers[layer_idx].weight
            net.layers[layer_idx].weight = w
            val, _ = loss_and_grads(net, X, Y, head_loss)
            net.layers[layer_idx].weight = old
            return val

        return inner

    return fn


class TestLossGradients:
    @pytest.mark.parametrize("widths,head,head_loss", [
        ([3, 3, 6], GaussianHead(), "squared"),
        ([4, 6, 5], SoftmaxHead(), "cross_entropy"),
    ])
    def test_weight_gradients_match_finite_differences(self, widths, head, head_loss):
        rng = np.random.default_rng(11)
        net = build_network(widths, head, seed=7)
        X = rng.standard_normal((12, widths[0]))
        if head_loss == "squared":
            Y = synthetic_target(X) if widths[0] == 3 else rng.random(12)
        else:
            Y = rng.integers(0, widths[-1], size=12)
        _, grads = loss_and_grads(net, X, Y, head_loss)
        make_fn = _loss_of_weights(net, X, Y, head_loss)
        for j in range(len(net.layers)):
            num = oracles.central_difference(make_fn(j), net.layers[j].weight.copy())
            assert np.allclose(grads[j][0], num, rtol=1e-5, atol=1e-7)

    def test_bias_gradients_match_finite_differences(self):
        rng = np.random.default_rng(5)
        net = build_network([3, 4, 2], SoftmaxHead(), seed=3)
        X = rng.standard_normal((9, 3))
        Y = rng.integers(0, 2, size=9)
        _, grads = loss_and_grads(net, X, Y, "cross_entropy")
        for j, layer in enumerate(net.layers):
            def fn(b, j=j, layer=layer):
                old = layer.bias
                layer.bias = b
                val, _ = loss_and_grads(net, X, Y, "cross_entropy")
                layer.bias = old
                return val

            num = oracles.central_difference(fn, layer.bias.copy())
            assert np.allclose(grads[j][1], num, rtol=1e-5, atol=1e-7)

    def test_empty_batch_rejected(self):
        net = build_network([3, 3, 6], GaussianHead(), seed=0)
        with pytest.raises(TrainerError):
            loss_and_grads(net, np.empty((0, 3)), np.empty(0))

    def test_mismatched_head_rejected(self):
        net = build_network([3, 4, 2], SoftmaxHead(), seed=0)
        with pytest.raises(TrainerError):
            loss_and_grads(net, np.ones((2, 3)), np.array([0.5, 0.5]), "squared")


class TestPerLayerRegularizer:
    def test_zero_matrix_value(self):
        # ||0|| = 0 and det(I + 0) = 1, so the value is exactly lam2
        val, _ = regularizer_perlayer(np.zeros((4, 3)), lam1=0.3, lam2=0.7)
        assert val == pytest.approx(0.7)

    def test_identity_value(self):
        # ||I_d|| = 1 and det(2 I_d) = 2^d
        for d in (2, 5):
            val, _ = regularizer_perlayer(np.eye(d), lam1=0.3, lam2=0.7)
            assert val == pytest.approx(0.3 + 0.7 / 2 ** d)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(21)
        for shape in [(3, 3), (5, 2), (2, 5)]:
            w = rng.standard_normal(shape)
            s = np.linalg.svd(w, compute_uv=False)
            if s[0] - s[1] < 1e-3:
                continue  # top singular pair not differentiable here
            _, g = regularizer_perlayer(w, 0.4, 0.9)
            num = oracles.central_difference(
                lambda m: regularizer_perlayer(m, 0.4, 0.9)[0], w.copy()
            )
            assert np.allclose(g, num, rtol=1e-5, atol=1e-8)


class TestSyntheticRegularizer:
    def test_scaled_identity_value(self):
        net = build_network([2, 2, 2], GaussianHead(), seed=0)
        for layer in net.layers:
            layer.weight = 2.0 * np.eye(2)
        # per layer: det(W^T W)^(-1/2) = 1/4, ||W|| = 2
        val, _ = regularizer_synthetic(net, lam=0.5)
        assert val == pytest.approx(0.5 * (1 / 16 + 10.0 * 4.0))

    def test_gradient_matches_finite_differences(self):
        net = build_network([3, 3, 3], GaussianHead(), seed=9)
        _, grads = regularizer_synthetic(net, lam=0.3)
        for j in range(len(net.layers)):
            def fn(w, j=j):
                old = net.layers[j].weight
                net.layers[j].weight = w
                val, _ = regularizer_synthetic(net, lam=0.3)
                net.layers[j].weight = old
                return val

            num = oracles.central_difference(fn, net.layers[j].weight.copy())
            assert np.allclose(grads[j], num, rtol=1e-4, atol=1e-8)

    def test_wide_layer_rejected(self):
        net = build_network([4, 3, 3], GaussianHead(), seed=0)
        with pytest.raises(RankDeficientError):
            regularizer_synthetic(net, lam=0.1)

    def test_singular_layer_rejected(self):
        net = build_network([2, 2, 2], GaussianHead(), seed=0)
        net.layers[0].weight = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(RankDeficientError) as info:
            regularizer_synthetic(net, lam=0.1)
        assert info.value.sigma_min == pytest.approx(0.0, abs=1e-12)


class TestDatasets:
    def test_synthetic_shapes_and_targets(self):
        ds = make_synthetic(50, seed=3)
        assert ds.inputs.shape == (50, 3)
        assert ds.held_inputs.shape == (500, 3)
        assert np.allclose(ds.targets, synthetic_target(ds.inputs))
        assert np.all(ds.targets > 0) and np.all(ds.targets <= 1)

    def test_synthetic_seeded(self):
        a, b = make_synthetic(20, seed=5), make_synthetic(20, seed=5)
        assert np.array_equal(a.inputs, b.inputs)
        assert not np.array_equal(a.inputs, make_synthetic(20, seed=6).inputs)

    def test_digits_split_and_range(self):
        ds = load_digits()
        assert ds.inputs.shape == (1500, 64)
        assert ds.held_inputs.shape == (300, 64)
        assert ds.inputs.min() >= 0.0 and ds.inputs.max() <= 1.0
        labels = np.concatenate([ds.targets, ds.held_targets]).astype(int)
        assert set(labels) == set(range(10))


class TestInit:
    def test_orthogonal_square(self):
        w = init_weight("orthogonal", 5, 5, np.random.default_rng(0))
        assert np.allclose(w.T @ w, np.eye(5), atol=1e-12)

    def test_orthogonal_rectangular_semi(self):
        tall = init_weight("orthogonal", 8, 3, np.random.default_rng(1))
        assert np.allclose(tall.T @ tall, np.eye(3), atol=1e-12)
        wide = init_weight("orthogonal", 3, 8, np.random.default_rng(1))
        assert np.allclose(wide @ wide.T, np.eye(3), atol=1e-12)

    def test_truncated_normal_bounded(self):
        w = init_weight("truncated_normal", 40, 30, np.random.default_rng(2))
        assert np.max(np.abs(w)) <= 2.0 * math.sqrt(2.0 / 30) + 1e-12

    def test_kaiming_scale(self):
        w = init_weight("kaiming", 400, 300, np.random.default_rng(3))
        assert np.std(w) == pytest.approx(math.sqrt(2.0 / 300), rel=0.05)

    def test_unknown_kind(self):
        with pytest.raises(TrainerError):
            init_weight("xavier", 3, 3, np.random.default_rng(0))


class TestBuildNetwork:
    def test_shapes_and_last_layer_identity(self):
        net = build_network([3, 5, 2], GaussianHead(), seed=0)
        assert [l.weight.shape for l in net.layers] == [(5, 3), (2, 5)]
        assert net.layers[0].activation.kind == "smooth_leaky_relu"
        assert net.layers[-1].activation.kind == "identity"

    def test_smoothness_chain_non_decreasing(self):
        net = build_network([6, 8, 8, 4], GaussianHead(), seed=0)
        chain = net.smoothness_chain()
        assert all(a <= b for a, b in zip(chain, chain[1:]))
        # the narrowing last layer inherits the previous exponent
        assert net.layers[-1].s_out == pytest.approx((8 + 0.1) / 2)

    def test_per_layer_init_list(self):
        net = build_network(
            [4, 4, 4], GaussianHead(), seed=1, init=["orthogonal", "kaiming"]
        )
        w = net.layers[0].weight
        assert np.allclose(w.T @ w, np.eye(4), atol=1e-12)

    def test_init_list_length_checked(self):
        with pytest.raises(TrainerError):
            build_network([3, 3, 3], GaussianHead(), seed=0, init=["kaiming"])


class TestConfigValidation:
    def test_bad_epochs(self):
        with pytest.raises(TrainerError):
            TrainConfig(epochs=0)

    def test_negative_lr(self):
        with pytest.raises(TrainerError):
            TrainConfig(learning_rate=-0.1)

    def test_unknown_optimizer(self):
        with pytest.raises(TrainerError):
            TrainConfig(optimizer="rmsprop")

    def test_bad_lr_decay(self):
        with pytest.raises(TrainerError):
            TrainConfig(lr_decay=0.0)
        with pytest.raises(TrainerError):
            TrainConfig(lr_decay=1.5)

    def test_bad_lr_decay_start(self):
        with pytest.raises(TrainerError):
            TrainConfig(lr_decay_start=0)


def _small_run(**overrides):
    kwargs = dict(epochs=5, learning_rate=0.05, regularizer="synthetic", lam=0.01)
    kwargs.update(overrides)
    cfg = TrainConfig(**kwargs)
    ds = make_synthetic(60, seed=0)
    net = build_network([3, 3, 6], GaussianHead(), seed=0)
    return train(cfg, ds, net)


class TestTrainLoop:
    def test_deterministic_repeat(self):
        a = _small_run(batch_size=16)
        b = _small_run(batch_size=16)
        for la, lb in zip(a.net.layers, b.net.layers):
            assert np.array_equal(la.weight, lb.weight)
            assert np.array_equal(la.bias, lb.bias)
        assert a.metrics_csv() == b.metrics_csv()

    def test_zero_learning_rate_freezes_weights(self):
        run = _small_run(learning_rate=0.0)
        fresh = build_network([3, 3, 6], GaussianHead(), seed=0)
        for trained, init in zip(run.net.layers, fresh.layers):
            assert np.array_equal(trained.weight, init.weight)
        losses = [m.train_loss for m in run.metrics]
        assert max(losses) == pytest.approx(min(losses))

    def test_lr_decay_changes_trajectory(self):
        plain = _small_run(batch_size=16)
        decayed = _small_run(batch_size=16, lr_decay=0.5)
        assert not np.array_equal(
            plain.net.layers[0].weight, decayed.net.layers[0].weight
        )

    def test_lr_decay_after_last_epoch_is_inert(self):
        plain = _small_run(batch_size=16)
        delayed = _small_run(batch_size=16, lr_decay=0.5, lr_decay_start=5)
        for la, lb in zip(plain.net.layers, delayed.net.layers):
            assert np.array_equal(la.weight, lb.weight)

    def test_loss_decreases(self):
        run = _small_run(epochs=30, batch_size=None)
        assert run.metrics[-1].train_loss < run.metrics[0].train_loss
        assert not run.diverged

    def test_divergence_flagged_with_partial_metrics(self):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            run = _small_run(epochs=50, learning_rate=1e160, regularizer="none")
        assert run.diverged
        assert len(run.metrics) < 50

    def test_spectrum_logged_every_epoch(self):
        run = _small_run(epochs=4)
        assert [rec.epoch for rec in run.spectrum.epochs] == [1, 2, 3, 4]
        assert len(run.spectrum.epochs[0].layers) == 2

    def test_adam_runs_and_differs_from_sgd(self):
        sgd = _small_run(epochs=3)
        adam = _small_run(epochs=3, optimizer="adam")
        assert not np.array_equal(sgd.net.layers[0].weight, adam.net.layers[0].weight)

    def test_gen_error_estimate_is_absolute_gap(self):
        ds = make_synthetic(40, seed=2)
        net = build_network([3, 3, 6], GaussianHead(), seed=2)
        t, _ = loss_and_grads(net, ds.inputs, ds.targets)
        h, _ = loss_and_grads(net, ds.held_inputs, ds.held_targets)
        assert gen_error_estimate(net, ds) == pytest.approx(abs(h - t))

    def test_classification_accuracy_bounds(self):
        ds = load_digits()
        net = build_network([64, 16, 10], SoftmaxHead(), seed=0)
        acc = classification_accuracy(net, ds.held_inputs, ds.held_targets)
        assert 0.0 <= acc <= 1.0
