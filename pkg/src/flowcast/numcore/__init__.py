"""Minimal reverse-mode differentiation engine and layer zoo.

Hand-rolled on numpy: layers cache their forward inputs and accumulate
parameter gradients on backward, an Adam/SGD pair consumes them, and
convolutions dispatch to a compiled kernel backend when available (see
``flowcast.numcore.kernels.BACKEND``).
"""

from .kernels import BACKEND
from .layers import LSTM, Conv1d, Conv2d, Dense, Layer, LSTMCell, ReLU, sigmoid
from .losses import mse_loss
from .optim import SGD, Adam
from .serialize import load_params, save_params
from .tensor import Tensor, uniform_init

__all__ = [
    "BACKEND",
    "LSTM",
    "Conv1d",
    "Conv2d",
    "Dense",
    "Layer",
    "LSTMCell",
    "ReLU",
    "sigmoid",
    "mse_loss",
    "SGD",
    "Adam",
    "load_params",
    "save_params",
    "Tensor",
    "uniform_init",
]
