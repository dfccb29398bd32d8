"""
Tests for the network engine: topology, forward/backward, Adam and checkpoints
"""

import numpy as np
import pytest

from src.losses import LossKind, LossSpec
from src.network import (
    Mode,
    NetworkGradients,
    adam_step,
    backward,
    copy_network,
    count_parameters,
    first_width,
    forward,
    gradient_vector,
    init_network,
    init_optimizer,
    leaky_relu,
    load_checkpoint,
    parameter_arrays,
    parameter_vector,
    save_checkpoint,
    set_parameter_vector,
)
from src.network.architecture import BatchNormLayer, _batch_norm_forward
from src.training import batch_objective
from src.utils.exceptions import InvalidArgumentError, NumericError

FD_STEP = 1e-6


def _mean_output(net, batch, output_grads):
    out, _ = forward(net, batch, Mode.TRAINING)
    return float(np.mean(output_grads * out))


def _finite_difference(net, objective):
    theta = parameter_vector(net)
    perturbed = copy_network(net)
    numeric = np.empty_like(theta)
    for j in range(theta.size):
        shifted = theta.copy()
        shifted[j] += FD_STEP
        set_parameter_vector(perturbed, shifted)
        upper = objective(perturbed)
        shifted[j] -= 2 * FD_STEP
        set_parameter_vector(perturbed, shifted)
        lower = objective(perturbed)
        numeric[j] = (upper - lower) / (2 * FD_STEP)
    return numeric


class TestTopology:

    @pytest.mark.parametrize("input_dim,expected", [(100, 130), (20, 42), (3, 23), (1, 21)])
    def test_first_width(self, input_dim, expected):
        assert first_width(input_dim) == expected
        assert init_network(input_dim, seed=7).width1 == expected

    def test_layer_shapes_chain(self):
        net = init_network(100, seed=7)
        assert net.widths == [130, 16, 16, 16, 16, 1]
        fan_in = 100
        for layer in net.dense:
            assert layer.weight.shape[1] == fan_in
            fan_in = layer.weight.shape[0]
        assert len(net.batch_norm) == 4
        assert all(np.all(bn.running_var > 0) for bn in net.batch_norm)

    def test_same_seed_same_bytes(self):
        a = init_network(100, seed=7)
        b = init_network(100, seed=7)
        assert parameter_vector(a).tobytes() == parameter_vector(b).tobytes()
        assert not np.array_equal(parameter_vector(a), parameter_vector(init_network(100, seed=8)))

    def test_zero_input_dim_rejected(self):
        with pytest.raises(InvalidArgumentError):
            init_network(0, seed=1)

    def test_batch_norm_starts_as_identity(self):
        net = init_network(5, seed=1)
        for bn in net.batch_norm:
            assert np.all(bn.gamma == 1.0) and np.all(bn.beta == 0.0)
            assert np.all(bn.running_mean == 0.0) and np.all(bn.running_var == 1.0)

    def test_parameter_vector_round_trip(self, small_net):
        theta = parameter_vector(small_net)
        assert theta.size == count_parameters(small_net)
        other = init_network(3, seed=99)
        set_parameter_vector(other, theta)
        assert np.array_equal(parameter_vector(other), theta)
        with pytest.raises(InvalidArgumentError):
            set_parameter_vector(other, np.zeros(theta.size + 1))


class TestForward:

    def test_leaky_relu(self):
        np.testing.assert_allclose(leaky_relu(np.array([-2.0, 2.0]), 0.3), [-0.6, 2.0])

    def test_batch_norm_identity_case(self, rng):
        x = rng.normal(size=(64, 4))
        x = (x - x.mean(axis=0)) / x.std(axis=0)
        bn = BatchNormLayer(np.ones(4), np.zeros(4), np.zeros(4), np.ones(4))
        y, _, _ = _batch_norm_forward(bn, x, Mode.TRAINING)
        np.testing.assert_allclose(y, x / np.sqrt(1.0 + bn.epsilon), rtol=1e-12)

    def test_training_mode_normalizes(self, rng, small_net):
        _, trace = forward(small_net, rng.normal(size=(16, 3)), Mode.TRAINING)
        for i, x_hat in enumerate(trace.normalized):
            assert np.all(np.abs(x_hat.mean(axis=0)) < 1e-8)
            # variance is var / (var + eps) before gamma and beta
            std = trace.batch_std[i]
            expected = 1.0 - small_net.batch_norm[i].epsilon / std ** 2
            np.testing.assert_allclose(x_hat.var(axis=0), expected, atol=1e-10)

    def test_inference_is_pure(self, rng, small_net):
        batch = rng.normal(size=(5, 3))
        before = [(bn.running_mean.copy(), bn.running_var.copy()) for bn in small_net.batch_norm]
        first, _ = forward(small_net, batch, Mode.INFERENCE)
        second, _ = forward(small_net, batch, Mode.INFERENCE)
        assert np.array_equal(first, second)
        for bn, (mean, var) in zip(small_net.batch_norm, before):
            assert np.array_equal(bn.running_mean, mean) and np.array_equal(bn.running_var, var)

    def test_training_updates_running_stats(self, rng, small_net):
        forward(small_net, rng.normal(size=(8, 3)) + 5.0, Mode.TRAINING)
        assert not np.allclose(small_net.batch_norm[0].running_mean, 0.0)

    def test_shape_errors(self, small_net):
        with pytest.raises(InvalidArgumentError):
            forward(small_net, np.zeros((4, 2)))
        with pytest.raises(InvalidArgumentError):
            forward(small_net, np.zeros((1, 3)), Mode.TRAINING)

    def test_input_scale_divides_inputs(self, rng, small_net):
        batch = rng.normal(size=(6, 3))
        scaled = copy_network(small_net)
        scaled.input_scale = np.array([2.0, 4.0, 0.5])
        a, _ = forward(small_net, batch / scaled.input_scale)
        b, _ = forward(scaled, batch)
        np.testing.assert_allclose(a, b, rtol=1e-12)


class TestBackward:

    def test_zero_output_grads(self, rng, small_net):
        _, trace = forward(small_net, rng.normal(size=(4, 3)), Mode.TRAINING)
        grads = backward(small_net, trace, np.zeros(4))
        assert np.all(gradient_vector(grads) == 0.0)

    def test_matches_finite_differences(self, rng, small_net):
        batch = rng.normal(size=(4, 3))
        output_grads = rng.normal(size=4)
        _, trace = forward(small_net, batch, Mode.TRAINING)
        analytic = gradient_vector(backward(small_net, trace, output_grads))
        numeric = _finite_difference(small_net, lambda net: _mean_output(net, batch, output_grads))
        np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-8)

    @pytest.mark.parametrize("spec", [
        LossSpec(LossKind.POLYNOMIAL, 2.0),
        LossSpec(LossKind.CROSS_ENTROPY),
        LossSpec(LossKind.EXPONENTIAL),
        LossSpec(LossKind.LOGISTIC),
        LossSpec(LossKind.ALPHA_EXPONENTIAL, 2.0),
        LossSpec(LossKind.ALPHA_LOG_EXPONENT, 1.5),
        LossSpec(LossKind.LPOP_EXPONENTIAL, 2.0),
    ], ids=lambda spec: spec.kind.value)
    def test_loss_gradient_per_kind(self, rng, small_net, spec):
        batch = rng.normal(size=(4, 3))
        labels = np.array([1, 0, 1, 0])
        _, grads, _ = batch_objective(small_net, spec, batch, labels)
        numeric = _finite_difference(
            small_net, lambda net: batch_objective(net, spec, batch, labels)[0]
        )
        np.testing.assert_allclose(gradient_vector(grads), numeric, rtol=1e-4, atol=1e-8)

    def test_row_duplication_leaves_gradients_unchanged(self, rng, small_net):
        batch = rng.normal(size=(4, 3))
        g = rng.normal(size=4)
        _, trace = forward(copy_network(small_net), batch, Mode.TRAINING)
        single = gradient_vector(backward(small_net, trace, g))
        _, trace2 = forward(copy_network(small_net), np.vstack([batch, batch]), Mode.TRAINING)
        doubled = gradient_vector(backward(small_net, trace2, np.concatenate([g, g])))
        np.testing.assert_allclose(doubled, single, rtol=1e-9, atol=1e-14)

    def test_row_permutation(self, rng, small_net):
        batch = rng.normal(size=(6, 3))
        g = rng.normal(size=6)
        perm = rng.permutation(6)
        out, trace = forward(copy_network(small_net), batch, Mode.TRAINING)
        out_p, trace_p = forward(copy_network(small_net), batch[perm], Mode.TRAINING)
        np.testing.assert_allclose(out_p, out[perm], rtol=1e-12)
        np.testing.assert_allclose(
            gradient_vector(backward(small_net, trace_p, g[perm])),
            gradient_vector(backward(small_net, trace, g)),
            rtol=1e-9, atol=1e-14,
        )

    def test_requires_training_trace(self, rng, small_net):
        _, trace = forward(small_net, rng.normal(size=(4, 3)), Mode.INFERENCE)
        with pytest.raises(InvalidArgumentError):
            backward(small_net, trace, np.ones(4))

    def test_mismatched_network_rejected(self, rng, small_net):
        _, trace = forward(small_net, rng.normal(size=(4, 3)), Mode.TRAINING)
        with pytest.raises(InvalidArgumentError):
            backward(init_network(5, seed=1), trace, np.ones(4))


def _uniform_grads(net, value):
    return NetworkGradients({name: np.full_like(array, value) for name, array in parameter_arrays(net)})


class TestAdam:

    def test_first_step_moves_by_learning_rate(self, small_net):
        opt = init_optimizer(small_net, learning_rate=1e-3)
        before = parameter_vector(small_net)
        adam_step(opt, small_net, _uniform_grads(small_net, 0.5))
        delta = parameter_vector(small_net) - before
        assert opt.step == 1
        assert np.all(np.abs(delta) <= 1e-3 * (1 + 1e-9))
        np.testing.assert_allclose(delta, -1e-3, rtol=1e-6)

    def test_zero_gradients_change_nothing(self, small_net):
        opt = init_optimizer(small_net)
        before = parameter_vector(small_net)
        adam_step(opt, small_net, _uniform_grads(small_net, 0.0))
        assert np.array_equal(parameter_vector(small_net), before)
        assert all(np.all(m == 0) for m in opt.first_moment.values())
        assert all(np.all(v == 0) for v in opt.second_moment.values())

    def test_quadratic_objective_decreases(self, small_net):
        opt = init_optimizer(small_net, learning_rate=1e-2)
        objective = lambda: 0.5 * float(np.sum(parameter_vector(small_net) ** 2))
        values = [objective()]
        for _ in range(2):
            grads = NetworkGradients({name: array.copy() for name, array in parameter_arrays(small_net)})
            adam_step(opt, small_net, grads)
            values.append(objective())
        assert values[0] > values[1] > values[2]

    def test_learning_rate_decays_per_epoch(self, small_net):
        opt = init_optimizer(small_net, learning_rate=1e-4, decay_rate=0.95)
        opt.epoch = 2
        assert opt.learning_rate == pytest.approx(1e-4 * 0.95 ** 2)

    def test_non_finite_gradient_names_layer(self, small_net):
        opt = init_optimizer(small_net)
        grads = _uniform_grads(small_net, 0.1)
        grads.arrays["dense_2.bias"][0] = np.nan
        with pytest.raises(NumericError, match="dense_2.bias"):
            adam_step(opt, small_net, grads)

    @pytest.mark.parametrize("kwargs", [{"learning_rate": 0.0}, {"decay_rate": 1.5}, {"epsilon": 0.0}])
    def test_invalid_settings(self, small_net, kwargs):
        with pytest.raises(InvalidArgumentError):
            init_optimizer(small_net, **kwargs)


class TestCheckpoint:

    def test_round_trip_is_bit_exact(self, tmp_path, rng, small_net):
        forward(small_net, rng.normal(size=(8, 3)), Mode.TRAINING)
        small_net.input_scale = np.array([1.5, 2.0, 0.25])
        path = save_checkpoint(small_net, tmp_path / "net.evnn")
        loaded = load_checkpoint(path)
        assert parameter_vector(loaded).tobytes() == parameter_vector(small_net).tobytes()
        assert np.array_equal(loaded.input_scale, small_net.input_scale)
        for a, b in zip(loaded.batch_norm, small_net.batch_norm):
            assert np.array_equal(a.running_mean, b.running_mean)
            assert np.array_equal(a.running_var, b.running_var)
            assert (a.momentum, a.epsilon) == (b.momentum, b.epsilon)
        batch = rng.normal(size=(5, 3))
        assert np.array_equal(forward(loaded, batch)[0], forward(small_net, batch)[0])

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.evnn"
        path.write_bytes(b"NOPE" + bytes(32))
        with pytest.raises(InvalidArgumentError):
            load_checkpoint(path)

    def test_truncated_file(self, tmp_path, small_net):
        path = save_checkpoint(small_net, tmp_path / "net.evnn")
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(InvalidArgumentError):
            load_checkpoint(path)
