"""Parameter container for reverse-mode differentiation.

A Tensor couples a value array with a gradient array of identical
shape.  Layers accumulate into ``grad`` during backward passes; the
optimizer consumes and zeroes it between steps.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    """A trainable array with an accumulated gradient."""

    __slots__ = ("values", "grad", "name")

    def __init__(self, values: np.ndarray, name: str = ""):
        self.values = np.asarray(values, dtype=np.float64)
        self.grad = np.zeros_like(self.values)
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def add_grad(self, g: np.ndarray) -> None:
        if g.shape != self.values.shape:
            raise ValueError(f"gradient shape {g.shape} != value shape {self.values.shape}")
        self.grad += g

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.values.shape})"


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    """Uniform init in +-1/sqrt(fan_in)."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)
