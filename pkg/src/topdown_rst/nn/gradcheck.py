"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .layers import Parameter
from .tensor import backward, no_grad


@dataclass
class GradMismatch:
    param: str
    index: tuple
    analytic: float
    numeric: float
    error: float

    def __str__(self):
        return (
            f"{self.param}{list(self.index)}: analytic={self.analytic:.10g} "
            f"numeric={self.numeric:.10g} err={self.error:.3g}"
        )


@dataclass
class GradCheckReport:
    tolerance: float
    checked: dict = field(default_factory=dict)  # param name -> coordinates checked
    max_error: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        lines = [
            f"{name}: {self.checked[name]} coords, max err {self.max_error[name]:.2e}"
            for name in self.checked
        ]
        lines += [f"FAIL {f}" for f in self.failures]
        lines.append(f"{'PASS' if self.passed else 'FAIL'} (tol {self.tolerance:g})")
        return "\n".join(lines)


def finite_difference_check(
    fn: Callable,
    params: Sequence[Parameter],
    tolerance: float = 1e-4,
    eps: float = 1e-6,
    samples: int = 12,
    seed: int = 0,
) -> GradCheckReport:
    """Compare analytic gradients of the scalar ``fn()`` with central differences.

    Up to ``samples`` coordinates per parameter are checked, half of them
    drawn from coordinates with a non-zero analytic gradient.  A coordinate
    fails when ``|analytic - numeric| / max(1, |analytic|) >= tolerance``.
    """
    rng = np.random.default_rng(seed)
    for p in params:
        p.zero_grad()
    out = fn()
    backward(out)
    analytic = {p.name: p.grad.copy() for p in params}
    report = GradCheckReport(tolerance)

    for p in params:
        grad = analytic[p.name]
        flat = np.arange(p.data.size)
        nonzero = np.flatnonzero(grad)
        k = min(samples, p.data.size)
        picks = list(rng.choice(nonzero, size=min(len(nonzero), (k + 1) // 2), replace=False)) if len(nonzero) else []
        rest = np.setdiff1d(flat, picks)
        picks += list(rng.choice(rest, size=min(len(rest), k - len(picks)), replace=False))
        worst = 0.0
        for c in picks:
            idx = np.unravel_index(int(c), p.data.shape)
            orig = p.data[idx]
            with no_grad():
                p.data[idx] = orig + eps
                up = float(fn().data)
                p.data[idx] = orig - eps
                down = float(fn().data)
            p.data[idx] = orig
            numeric = (up - down) / (2 * eps)
            a = float(grad[idx])
            err = abs(a - numeric) / max(1.0, abs(a))
            worst = max(worst, err)
            if not err < tolerance:
                report.failures.append(GradMismatch(p.name, tuple(int(i) for i in idx), a, numeric, err))
        report.checked[p.name] = len(picks)
        report.max_error[p.name] = worst
    for p in params:
        p.zero_grad()
    return report
