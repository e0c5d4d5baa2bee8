"""Layer zoo: dense, ReLU, 2-D/1-D convolution, LSTM.

Every layer follows the same protocol: ``forward(x)`` returns the
output and caches whatever backward needs; ``backward(dout)`` returns
the gradient with respect to the input and accumulates parameter
gradients into the layer's Tensors.  All math is float64.

LSTM conventions: gates are ordered [input, forget, candidate, output]
inside the fused weight matrices, c' = f*c + i*g, h' = o*tanh(c'), and
the unit's output vector equals its new hidden state.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .tensor import Tensor, uniform_init


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Layer:
    def params(self) -> list[Tensor]:
        return []

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Dense(Layer):
    """Affine map on the last axis: out = x @ W + b."""

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, name: str = "dense"):
        self.w = Tensor(uniform_init(rng, (d_in, d_out), d_in), f"{name}.w")
        self.b = Tensor(uniform_init(rng, (d_out,), d_in), f"{name}.b")
        self._x = None

    def params(self) -> list[Tensor]:
        return [self.w, self.b]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[-1] != self.w.shape[0]:
            raise ValueError(f"input dim {x.shape[-1]} != weight in-dim {self.w.shape[0]}")
        self._x = x
        return x @ self.w.values + self.b.values

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x = self._x
        self.w.add_grad(x.reshape(-1, x.shape[-1]).T @ dout.reshape(-1, dout.shape[-1]))
        self.b.add_grad(dout.reshape(-1, dout.shape[-1]).sum(axis=0))
        return dout @ self.w.values.T


class ReLU(Layer):
    """Elementwise max(x, 0); subgradient at 0 is taken as 0."""

    def __init__(self):
        self._mask = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return np.where(self._mask, dout, 0.0)


class Conv2d(Layer):
    """3x3 (by default) cross-correlation, stride 1, "same" zero padding.

    Input (B, C_in, H, W) -> output (B, C_out, H, W).
    """

    def __init__(
        self,
        c_in: int,
        c_out: int,
        rng: np.random.Generator,
        kernel: int = 3,
        name: str = "conv2d",
    ):
        if kernel % 2 == 0:
            raise ValueError("kernel size must be odd for same padding")
        fan_in = c_in * kernel * kernel
        self.w = Tensor(uniform_init(rng, (c_out, c_in, kernel, kernel), fan_in), f"{name}.w")
        self.b = Tensor(uniform_init(rng, (c_out,), fan_in), f"{name}.b")
        self._x = None

    def params(self) -> list[Tensor]:
        return [self.w, self.b]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 4 or x.shape[1] != self.w.shape[1]:
            raise ValueError(f"expected (B, {self.w.shape[1]}, H, W) input, got {x.shape}")
        self._x = np.ascontiguousarray(x)
        return kernels.conv2d_forward(self._x, self.w.values, self.b.values)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        dx, dw, db = kernels.conv2d_backward(dout, self._x, self.w.values)
        self.w.add_grad(dw)
        self.b.add_grad(db)
        return dx


class Conv1d(Layer):
    """Width-3 (by default) cross-correlation along one spatial axis.

    Input (B, C_in, L) -> output (B, C_out, L); stride 1, "same" padding.
    """

    def __init__(
        self,
        c_in: int,
        c_out: int,
        rng: np.random.Generator,
        kernel: int = 3,
        name: str = "conv1d",
    ):
        if kernel % 2 == 0:
            raise ValueError("kernel size must be odd for same padding")
        fan_in = c_in * kernel
        self.w = Tensor(uniform_init(rng, (c_out, c_in, kernel), fan_in), f"{name}.w")
        self.b = Tensor(uniform_init(rng, (c_out,), fan_in), f"{name}.b")
        self._x = None

    def params(self) -> list[Tensor]:
        return [self.w, self.b]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 3 or x.shape[1] != self.w.shape[1]:
            raise ValueError(f"expected (B, {self.w.shape[1]}, L) input, got {x.shape}")
        self._x = np.ascontiguousarray(x)
        return kernels.conv1d_forward(self._x, self.w.values, self.b.values)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        dx, dw, db = kernels.conv1d_backward(dout, self._x, self.w.values)
        self.w.add_grad(dw)
        self.b.add_grad(db)
        return dx


class LSTMCell:
    """One LSTM unit with fused gate weights.

    ``step`` advances a single time step; it returns the new hidden
    state, the new cell state and the unit's output vector (equal to
    the new hidden state), plus a cache consumed by ``backward_step``.
    """

    def __init__(self, d_in: int, hidden: int, rng: np.random.Generator, name: str = "lstm"):
        fan_in = d_in + hidden
        self.wx = Tensor(uniform_init(rng, (d_in, 4 * hidden), fan_in), f"{name}.wx")
        self.wh = Tensor(uniform_init(rng, (hidden, 4 * hidden), fan_in), f"{name}.wh")
        self.b = Tensor(uniform_init(rng, (4 * hidden,), fan_in), f"{name}.b")
        self.hidden = hidden

    def params(self) -> list[Tensor]:
        return [self.wx, self.wh, self.b]

    def step(self, x: np.ndarray, h: np.ndarray, c: np.ndarray):
        hd = self.hidden
        z = x @ self.wx.values + h @ self.wh.values + self.b.values
        i = sigmoid(z[:, :hd])
        f = sigmoid(z[:, hd : 2 * hd])
        g = np.tanh(z[:, 2 * hd : 3 * hd])
        o = sigmoid(z[:, 3 * hd :])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        cache = (x, h, c, i, f, g, o, tanh_c)
        return h_new, c_new, h_new, cache

    def backward_step(self, dh: np.ndarray, dc: np.ndarray, cache):
        """Propagate (dh, dc) through one step; returns (dx, dh_prev, dc_prev)."""
        x, h_prev, c_prev, i, f, g, o, tanh_c = cache
        do = dh * tanh_c
        dc_total = dc + dh * o * (1.0 - tanh_c * tanh_c)
        di = dc_total * g
        df = dc_total * c_prev
        dg = dc_total * i
        dz = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ],
            axis=1,
        )
        self.wx.add_grad(x.T @ dz)
        self.wh.add_grad(h_prev.T @ dz)
        self.b.add_grad(dz.sum(axis=0))
        dx = dz @ self.wx.values.T
        dh_prev = dz @ self.wh.values.T
        dc_prev = dc_total * f
        return dx, dh_prev, dc_prev


class LSTM(Layer):
    """Chain of LSTM units sharing one cell's parameters.

    Input (B, T, D); output is the last unit's output vector (B, hidden).
    Initial hidden and cell states are zero.
    """

    def __init__(self, d_in: int, hidden: int, rng: np.random.Generator, name: str = "lstm"):
        self.cell = LSTMCell(d_in, hidden, rng, name)
        self._caches = None
        self._steps = 0
        self._batch = 0
        self._d_in = d_in

    def params(self) -> list[Tensor]:
        return self.cell.params()

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 3 or x.shape[2] != self._d_in:
            raise ValueError(f"expected (B, T, {self._d_in}) input, got {x.shape}")
        batch, steps, _ = x.shape
        h = np.zeros((batch, self.cell.hidden))
        c = np.zeros((batch, self.cell.hidden))
        self._caches = []
        self._steps, self._batch = steps, batch
        out = h
        for t in range(steps):
            h, c, out, cache = self.cell.step(x[:, t, :], h, c)
            self._caches.append(cache)
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        dh = dout
        dc = np.zeros_like(dh)
        dx = np.empty((self._batch, self._steps, self._d_in))
        for t in range(self._steps - 1, -1, -1):
            dx[:, t, :], dh, dc = self.cell.backward_step(dh, dc, self._caches[t])
        return dx
