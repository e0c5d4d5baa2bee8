"""Tests for the differentiation engine.

The authority for every backward pass is the central finite-difference
oracle in gradcheck; the worked examples pin down forward conventions
(padding, gate order, loss normalization) that the oracle alone cannot.
"""

import numpy as np
import pytest

from flowcast.numcore import (
    LSTM,
    Adam,
    Conv1d,
    Conv2d,
    Dense,
    LSTMCell,
    ReLU,
    Tensor,
    load_params,
    mse_loss,
    save_params,
    sigmoid,
    uniform_init,
)
from flowcast.numcore.kernels import _ext, _pykernels

from gradcheck import TOL, check_model_gradients, numerical_grad, relative_error


def _rng(seed=0):
    return np.random.default_rng(seed)


class TestSigmoid:
    def test_midpoint(self):
        assert sigmoid(np.array([0.0]))[0] == 0.5

    def test_saturates_without_overflow(self):
        with np.errstate(over="raise"):
            out = sigmoid(np.array([-800.0, 800.0]))
        np.testing.assert_array_equal(out, [0.0, 1.0])

    def test_symmetry(self):
        x = np.linspace(-5, 5, 11)
        np.testing.assert_allclose(sigmoid(x) + sigmoid(-x), 1.0, rtol=1e-15)


class TestDense:
    def test_identity_weights_pass_input_through(self):
        layer = Dense(4, 4, _rng())
        layer.w.values[:] = np.eye(4)
        layer.b.values[:] = 0.0
        x = _rng(1).standard_normal((3, 4))
        np.testing.assert_array_equal(layer.forward(x), x)

    def test_scalar_case(self):
        """W=[2], b=[3], in=[4] -> out 11, d out/d in = 2."""
        layer = Dense(1, 1, _rng())
        layer.w.values[:] = 2.0
        layer.b.values[:] = 3.0
        out = layer.forward(np.array([[4.0]]))
        assert out[0, 0] == 11.0
        dx = layer.backward(np.ones((1, 1)))
        assert dx[0, 0] == 2.0

    def test_gradients_match_finite_differences(self):
        layer = Dense(5, 7, _rng(2))
        x = _rng(3).standard_normal((4, 5))
        assert check_model_gradients(layer, x) < TOL

    def test_rejects_wrong_input_dim(self):
        with pytest.raises(ValueError):
            Dense(5, 7, _rng()).forward(np.ones((2, 6)))


class TestReLU:
    def test_clips_negatives(self):
        out = ReLU().forward(np.array([-2.0, 0.0, 3.0]))
        np.testing.assert_array_equal(out, [0.0, 0.0, 3.0])

    def test_all_negative_gives_zero(self):
        out = ReLU().forward(-np.ones((2, 3)))
        np.testing.assert_array_equal(out, 0.0)

    def test_subgradient(self):
        """d sum(relu(x)) at [-1, 1] is [0, 1]; the kink at 0 counts as 0."""
        layer = ReLU()
        layer.forward(np.array([-1.0, 1.0]))
        np.testing.assert_array_equal(layer.backward(np.ones(2)), [0.0, 1.0])
        layer.forward(np.array([0.0]))
        np.testing.assert_array_equal(layer.backward(np.ones(1)), [0.0])


class TestConv2d:
    def test_centred_delta_kernel_is_identity(self):
        layer = Conv2d(1, 1, _rng())
        layer.w.values[:] = 0.0
        layer.w.values[0, 0, 1, 1] = 1.0
        layer.b.values[:] = 0.0
        x = _rng(1).standard_normal((2, 1, 5, 6))
        np.testing.assert_allclose(layer.forward(x), x, rtol=1e-15)

    def test_ones_kernel_spreads_one_hot(self):
        """A centred one-hot blurs to a 3x3 block; corners clip at the border."""
        layer = Conv2d(1, 1, _rng())
        layer.w.values[:] = 1.0
        layer.b.values[:] = 0.0
        x = np.zeros((1, 1, 5, 5))
        x[0, 0, 2, 2] = 1.0
        out = layer.forward(x)
        expect = np.zeros((5, 5))
        expect[1:4, 1:4] = 1.0
        np.testing.assert_array_equal(out[0, 0], expect)
        # Same kernel, impulse in the corner: only the in-bounds part answers.
        x2 = np.zeros((1, 1, 5, 5))
        x2[0, 0, 0, 0] = 1.0
        out2 = layer.forward(x2)
        expect2 = np.zeros((5, 5))
        expect2[0:2, 0:2] = 1.0
        np.testing.assert_array_equal(out2[0, 0], expect2)

    def test_output_keeps_spatial_shape(self):
        layer = Conv2d(2, 3, _rng())
        out = layer.forward(_rng(1).standard_normal((4, 2, 6, 7)))
        assert out.shape == (4, 3, 6, 7)

    def test_gradients_match_finite_differences(self):
        layer = Conv2d(2, 3, _rng(4))
        x = _rng(5).standard_normal((2, 2, 4, 5))
        assert check_model_gradients(layer, x) < TOL

    def test_rejects_even_kernel(self):
        with pytest.raises(ValueError):
            Conv2d(1, 1, _rng(), kernel=2)


class TestConv1d:
    def test_centred_delta_kernel_is_identity(self):
        layer = Conv1d(1, 1, _rng())
        layer.w.values[:] = 0.0
        layer.w.values[0, 0, 1] = 1.0
        layer.b.values[:] = 0.0
        x = _rng(1).standard_normal((3, 1, 8))
        np.testing.assert_allclose(layer.forward(x), x, rtol=1e-15)

    def test_zero_padding_shrinks_edges(self):
        """A width-3 ones kernel on all-ones input sums 2 at the edges, 3 inside."""
        layer = Conv1d(1, 1, _rng())
        layer.w.values[:] = 1.0
        layer.b.values[:] = 0.0
        out = layer.forward(np.ones((1, 1, 5)))
        np.testing.assert_array_equal(out[0, 0], [2.0, 3.0, 3.0, 3.0, 2.0])

    def test_gradients_match_finite_differences(self):
        layer = Conv1d(2, 4, _rng(6))
        x = _rng(7).standard_normal((3, 2, 6))
        assert check_model_gradients(layer, x) < TOL


class TestLSTM:
    def test_zero_params_from_zero_state_stay_zero(self):
        cell = LSTMCell(3, 2, _rng())
        for p in cell.params():
            p.values[:] = 0.0
        h = np.zeros((1, 2))
        c = np.zeros((1, 2))
        h2, c2, out, _ = cell.step(_rng(1).standard_normal((1, 3)), h, c)
        np.testing.assert_array_equal(h2, 0.0)
        np.testing.assert_array_equal(c2, 0.0)
        np.testing.assert_array_equal(out, h2)

    def test_saturated_forget_gate_preserves_cell(self):
        """With f ~ 1 the update degenerates to c' = c + i*g."""
        hidden = 3
        cell = LSTMCell(2, hidden, _rng())
        for p in cell.params():
            p.values[:] = 0.0
        cell.b.values[hidden : 2 * hidden] = 100.0  # forget gate
        cell.b.values[2 * hidden : 3 * hidden] = 1.0  # candidate
        c = _rng(1).standard_normal((1, hidden))
        _, c2, _, _ = cell.step(np.zeros((1, 2)), np.zeros((1, hidden)), c)
        np.testing.assert_allclose(c2, c + 0.5 * np.tanh(1.0), rtol=1e-12)

    def test_output_equals_new_hidden_state(self):
        cell = LSTMCell(2, 4, _rng(8))
        h = _rng(9).standard_normal((2, 4))
        c = _rng(10).standard_normal((2, 4))
        h2, _, out, _ = cell.step(_rng(11).standard_normal((2, 2)), h, c)
        np.testing.assert_array_equal(out, h2)

    def test_gradients_through_four_steps(self):
        layer = LSTM(3, 4, _rng(12))
        x = _rng(13).standard_normal((2, 4, 3))
        assert check_model_gradients(layer, x) < TOL

    def test_rejects_wrong_rank(self):
        with pytest.raises(ValueError):
            LSTM(3, 4, _rng()).forward(np.ones((2, 3)))


class TestMseLoss:
    def test_perfect_prediction_is_zero(self):
        x = _rng(1).standard_normal((3, 4))
        loss, grad = mse_loss(x, x.copy())
        assert loss == 0.0
        np.testing.assert_array_equal(grad, 0.0)

    def test_scalar_case(self):
        """(3-1)^2 = 4 with gradient 2*(3-1) = 4."""
        loss, grad = mse_loss(np.array([3.0]), np.array([1.0]))
        assert loss == 4.0
        np.testing.assert_array_equal(grad, [4.0])

    def test_gradient_matches_finite_differences(self):
        pred = _rng(2).standard_normal((4, 5))
        target = _rng(3).standard_normal((4, 5))
        _, grad = mse_loss(pred, target)
        num = numerical_grad(lambda: mse_loss(pred, target)[0], pred)
        assert relative_error(grad, num) < TOL

    def test_rejects_mismatch_and_empty(self):
        with pytest.raises(ValueError):
            mse_loss(np.ones(3), np.ones(4))
        with pytest.raises(ValueError):
            mse_loss(np.empty(0), np.empty(0))


class TestAdam:
    def test_zero_gradient_leaves_params_alone(self):
        p = Tensor(np.array([1.0, -2.0]))
        opt = Adam([p], lr=0.1, l2=0.0)
        for _ in range(5):
            opt.zero_grad()
            opt.step()
        np.testing.assert_array_equal(p.values, [1.0, -2.0])

    def test_constant_gradient_steps_approach_lr(self):
        """With a constant gradient the update tends to lr * sign(g)."""
        p = Tensor(np.array([0.0]))
        opt = Adam([p], lr=0.01, l2=0.0)
        delta = 0.0
        for _ in range(500):
            before = p.values.copy()
            opt.zero_grad()
            p.add_grad(np.array([2.5]))
            opt.step()
            delta = p.values[0] - before[0]
        np.testing.assert_allclose(delta, -0.01, rtol=1e-6)

    def test_quadratic_bowl_loss_decreases(self):
        p = Tensor(_rng(5).standard_normal(6))
        opt = Adam([p], lr=0.05, l2=0.0)
        losses = []
        for _ in range(10):
            losses.append(0.5 * float(p.values @ p.values))
            opt.zero_grad()
            p.add_grad(p.values.copy())
            opt.step()
        losses.append(0.5 * float(p.values @ p.values))
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_matches_reference_formulas_with_l2(self):
        """Bias-corrected updates with L2 folded into the gradient."""
        rng = _rng(6)
        start = rng.standard_normal(4)
        grads = [rng.standard_normal(4) for _ in range(7)]
        lr, b1, b2, eps, l2 = 0.02, 0.9, 0.999, 1e-8, 0.5

        x = start.copy()
        m = np.zeros(4)
        v = np.zeros(4)
        for t, g in enumerate(grads, start=1):
            g = g + l2 * x
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            x = x - lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)

        p = Tensor(start.copy())
        opt = Adam([p], lr=lr, beta1=b1, beta2=b2, eps=eps, l2=l2)
        for g in grads:
            opt.zero_grad()
            p.add_grad(g)
            opt.step()
        np.testing.assert_allclose(p.values, x, rtol=1e-12)


class TestTensor:
    def test_backward_twice_doubles_gradient(self):
        layer = Dense(3, 2, _rng(7))
        x = _rng(8).standard_normal((4, 3))
        out = layer.forward(x)
        for p in layer.params():
            p.zero_grad()
        layer.backward(np.ones_like(out))
        once = [p.grad.copy() for p in layer.params()]
        layer.forward(x)
        layer.backward(np.ones_like(out))
        for p, g in zip(layer.params(), once):
            np.testing.assert_array_equal(p.grad, 2.0 * g)

    def test_add_grad_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            Tensor(np.ones((2, 2))).add_grad(np.ones(3))

    def test_uniform_init_bounds_and_determinism(self):
        a = uniform_init(_rng(9), (100, 50), fan_in=100)
        b = uniform_init(_rng(9), (100, 50), fan_in=100)
        np.testing.assert_array_equal(a, b)
        assert np.abs(a).max() <= 1.0 / np.sqrt(100)

    def test_forward_is_deterministic(self):
        layer = Conv2d(2, 3, _rng(10))
        x = _rng(11).standard_normal((2, 2, 5, 5))
        np.testing.assert_array_equal(layer.forward(x), layer.forward(x))


@pytest.mark.skipif(_ext is None, reason="compiled kernels not built")
class TestKernelBackends:
    """The compiled and pure-python convolution kernels must agree."""

    def test_conv2d_parity(self):
        rng = _rng(12)
        x = np.ascontiguousarray(rng.standard_normal((3, 2, 6, 7)))
        w = np.ascontiguousarray(rng.standard_normal((4, 2, 3, 3)))
        b = np.ascontiguousarray(rng.standard_normal(4))
        out_c = _ext.conv2d_forward(x, w, b)
        out_p = _pykernels.conv2d_forward(x, w, b)
        np.testing.assert_allclose(out_c, out_p, rtol=1e-12, atol=1e-12)
        dout = np.ascontiguousarray(rng.standard_normal(out_c.shape))
        for got, want in zip(_ext.conv2d_backward(dout, x, w), _pykernels.conv2d_backward(dout, x, w)):
            np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)

    def test_conv1d_parity(self):
        rng = _rng(13)
        x = np.ascontiguousarray(rng.standard_normal((4, 3, 9)))
        w = np.ascontiguousarray(rng.standard_normal((5, 3, 3)))
        b = np.ascontiguousarray(rng.standard_normal(5))
        out_c = _ext.conv1d_forward(x, w, b)
        out_p = _pykernels.conv1d_forward(x, w, b)
        np.testing.assert_allclose(out_c, out_p, rtol=1e-12, atol=1e-12)
        dout = np.ascontiguousarray(rng.standard_normal(out_c.shape))
        for got, want in zip(_ext.conv1d_backward(dout, x, w), _pykernels.conv1d_backward(dout, x, w)):
            np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)


class TestSerialize:
    def test_round_trip_preserves_arrays_and_meta(self, tmp_path):
        rng = _rng(14)
        arrays = {
            "dense.w": rng.standard_normal((3, 4)),
            "dense.b": rng.standard_normal(4),
            "scalar": np.array(2.5),
        }
        meta = {"arch": "bpnn", "note": "unit test"}
        path = tmp_path / "model.fcp"
        save_params(path, arrays, meta)
        got_meta, got = load_params(path)
        assert got_meta == meta
        assert list(got) == list(arrays)
        for name in arrays:
            np.testing.assert_array_equal(got[name], arrays[name])

    def test_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "bogus.fcp"
        path.write_bytes(b"NOPE\n{}")
        with pytest.raises(ValueError, match="magic"):
            load_params(path)

    def test_rejects_truncated_file(self, tmp_path):
        path = tmp_path / "model.fcp"
        save_params(path, {"w": np.ones((4, 4))}, {})
        whole = path.read_bytes()
        path.write_bytes(whole[:-8])
        with pytest.raises(ValueError, match="truncated"):
            load_params(path)

    def test_rejects_trailing_bytes(self, tmp_path):
        path = tmp_path / "model.fcp"
        save_params(path, {"w": np.ones(2)}, {})
        path.write_bytes(path.read_bytes() + b"x")
        with pytest.raises(ValueError, match="trailing"):
            load_params(path)

    def test_save_is_byte_deterministic(self, tmp_path):
        arrays = {"w": _rng(15).standard_normal((8, 2))}
        save_params(tmp_path / "a.fcp", arrays, {"k": 1})
        save_params(tmp_path / "b.fcp", arrays, {"k": 1})
        assert (tmp_path / "a.fcp").read_bytes() == (tmp_path / "b.fcp").read_bytes()
