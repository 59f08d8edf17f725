"""Adam with bias correction, applied per parameter."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from ..errors import DivergenceError
from .layers import Parameter


def adam_step(
    param: Parameter,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-6,
) -> None:
    """Update ``param`` in place from its accumulated gradient, then zero it."""
    g = param.grad
    if not np.all(np.isfinite(g)):
        raise DivergenceError(f"non-finite gradient in {param.name}")
    param.step_count += 1
    t = param.step_count
    param.adam_m *= beta1
    param.adam_m += (1.0 - beta1) * g
    param.adam_v *= beta2
    param.adam_v += (1.0 - beta2) * (g * g)
    m_hat = param.adam_m / (1.0 - beta1**t)
    v_hat = param.adam_v / (1.0 - beta2**t)
    param.data -= lr * m_hat / (np.sqrt(v_hat) + eps)
    param.grad = np.zeros_like(param.data)


class Adam:
    def __init__(self, params: Iterable[Parameter], lr=0.001, beta1=0.9, beta2=0.999, eps=1e-6):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def step(self) -> None:
        for p in self.params:
            adam_step(p, self.lr, self.beta1, self.beta2, self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
