"""Minimal float64 neural network kernel: autodiff, layers, Adam, gradient checks."""

from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import GradCheckReport, finite_difference_check
from .layers import (
    LSTMParams,
    Parameter,
    avg_pool,
    bidirectional_encode,
    bidirectional_lstm,
    binary_cross_entropy,
    cross_entropy,
    lstm_cell,
    lstm_sequence,
    window_weights,
)
from .optim import Adam, adam_step
from .tensor import (
    Tensor,
    affine,
    backward,
    concat,
    dropout,
    no_grad,
    sigmoid,
    softmax,
)

__all__ = [
    "Adam",
    "GradCheckReport",
    "LSTMParams",
    "Parameter",
    "Tensor",
    "adam_step",
    "affine",
    "avg_pool",
    "backward",
    "bidirectional_encode",
    "bidirectional_lstm",
    "binary_cross_entropy",
    "concat",
    "cross_entropy",
    "dropout",
    "finite_difference_check",
    "load_checkpoint",
    "lstm_cell",
    "lstm_sequence",
    "no_grad",
    "save_checkpoint",
    "sigmoid",
    "softmax",
    "window_weights",
]
