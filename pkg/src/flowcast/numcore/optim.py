"""Optimizers.

Adam is the workhorse; plain SGD exists as a comparator only.  L2
regularization is applied by adding ``l2 * value`` to the gradient
before the moment updates, so it shares Adam's per-parameter scaling.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class Adam:
    def __init__(
        self,
        params: list[Tensor],
        lr: float = 3e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        l2: float = 1e-8,
    ):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.l2 = l2
        self.t = 0
        self._m = [np.zeros_like(p.values) for p in self.params]
        self._v = [np.zeros_like(p.values) for p in self.params]

    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self._m, self._v):
            g = p.grad + self.l2 * p.values
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.values -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


class SGD:
    def __init__(self, params: list[Tensor], lr: float = 3e-4, l2: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.l2 = l2

    def step(self) -> None:
        for p in self.params:
            p.values -= self.lr * (p.grad + self.l2 * p.values)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
