"""Convolution kernel backend selection.

Two implementations compute the same quantities: a compiled extension
with plain C loops and a numpy version that unrolls the convolution into
per-tap matrix products.  The C loops win when the channel contraction
is small (BLAS call overhead dominates); the matrix products win once
the contraction is large enough to keep BLAS busy.  The crossover sits
near in_channels * out_channels = 128 on desk hardware, so the default
"hybrid" backend dispatches per call on that product.

Set FLOWCAST_BACKEND=python to force the numpy implementation,
FLOWCAST_BACKEND=compiled to force the extension (failing loudly when it
is not built), or leave the default "auto".  Summation order differs
between the implementations, so they agree to rounding (~1e-12
relative), not bit-exactly; any single backend setting is fully
deterministic.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

_requested = os.environ.get("FLOWCAST_BACKEND", "auto").lower()
_ext = None
if _requested in ("auto", "compiled"):
    try:
        from . import _convkernels as _ext

        BACKEND = "compiled" if _requested == "compiled" else "hybrid"
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "FLOWCAST_BACKEND=compiled but the _convkernels extension is not built"
            )
        BACKEND = "python"
elif _requested == "python":
    BACKEND = "python"
else:
    raise ValueError(f"unknown FLOWCAST_BACKEND {_requested!r}; use 'compiled' or 'python'")

# Largest in*out channel product still handled by the direct C loops in
# hybrid mode; beyond it the per-tap BLAS products are faster.
SMALL_CONTRACTION = 128


def _c(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def _pick(w: np.ndarray):
    if _ext is None:
        return _pykernels
    if BACKEND == "compiled" or w.shape[0] * w.shape[1] <= SMALL_CONTRACTION:
        return _ext
    return _pykernels


def conv2d_forward(x, w, b):
    w = _c(w)
    return _pick(w).conv2d_forward(_c(x), w, _c(b))


def conv2d_backward(dout, x, w):
    w = _c(w)
    return _pick(w).conv2d_backward(_c(dout), _c(x), w)


def conv1d_forward(x, w, b):
    w = _c(w)
    return _pick(w).conv1d_forward(_c(x), w, _c(b))


def conv1d_backward(dout, x, w):
    w = _c(w)
    return _pick(w).conv1d_backward(_c(dout), _c(x), w)
