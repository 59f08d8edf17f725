"""Parameters and the layers the parser is built from."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ShapeError
from . import tensor as T
from .tensor import Tensor, _make, _sigmoid, as_tensor


class Parameter(Tensor):
    """A trainable leaf tensor carrying its own Adam state."""

    __slots__ = ("name", "adam_m", "adam_v", "step_count")

    def __init__(self, name: str, value):
        super().__init__(value, requires_grad=True)
        self.name = name
        self.grad = np.zeros_like(self.data)
        self.adam_m = np.zeros_like(self.data)
        self.adam_v = np.zeros_like(self.data)
        self.step_count = 0

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape})"

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)


def glorot(rng, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape or (fan_in, fan_out))


def linear_params(rng, prefix: str, n_in: int, n_out: int) -> dict[str, Parameter]:
    return {
        f"{prefix}.W": Parameter(f"{prefix}.W", glorot(rng, n_in, n_out)),
        f"{prefix}.b": Parameter(f"{prefix}.b", np.zeros(n_out)),
    }


# ---------------------------------------------------------------------------
# LSTM


@dataclass
class LSTMParams:
    """Gate weights stacked as ``[input | forget | cell | output]``."""

    Wx: Parameter  # (input, 4H)
    Wh: Parameter  # (H, 4H)
    b: Parameter  # (4H,)

    @property
    def hidden(self) -> int:
        return self.Wh.shape[0]

    @property
    def input_dim(self) -> int:
        return self.Wx.shape[0]

    def parameters(self) -> list[Parameter]:
        return [self.Wx, self.Wh, self.b]

    @classmethod
    def init(cls, rng, name: str, n_in: int, hidden: int) -> "LSTMParams":
        Wx = np.concatenate([glorot(rng, n_in, hidden) for _ in range(4)], axis=1)
        Wh = np.concatenate([glorot(rng, hidden, hidden) for _ in range(4)], axis=1)
        b = np.zeros(4 * hidden)
        b[hidden : 2 * hidden] = 1.0  # forget gate
        return cls(
            Parameter(f"{name}.Wx", Wx),
            Parameter(f"{name}.Wh", Wh),
            Parameter(f"{name}.b", b),
        )


def lstm_cell(x_t, h_prev, c_prev, params: LSTMParams):
    """One LSTM step composed from primitive ops; returns ``(h_t, c_t)``."""
    x_t, h_prev, c_prev = as_tensor(x_t), as_tensor(h_prev), as_tensor(c_prev)
    H = params.hidden
    if x_t.shape[-1] != params.input_dim or h_prev.shape[-1] != H or c_prev.shape[-1] != H:
        raise ShapeError(f"lstm_cell: x{x_t.shape} h{h_prev.shape} c{c_prev.shape} for hidden {H}")
    z = T.add(T.affine(x_t, params.Wx, params.b), T.matmul(h_prev, params.Wh))
    sl = [slice(None)] * (z.ndim - 1)
    i = T.sigmoid(T.getitem(z, tuple(sl + [slice(0, H)])))
    f = T.sigmoid(T.getitem(z, tuple(sl + [slice(H, 2 * H)])))
    g = T.tanh(T.getitem(z, tuple(sl + [slice(2 * H, 3 * H)])))
    o = T.sigmoid(T.getitem(z, tuple(sl + [slice(3 * H, 4 * H)])))
    c = T.add(T.mul(f, c_prev), T.mul(i, g))
    h = T.mul(o, T.tanh(c))
    return h, c


def _reverse_index(lengths: np.ndarray, steps: int) -> np.ndarray:
    """Per-row time index that reverses the valid prefix and leaves padding."""
    t = np.arange(steps)[None, :]
    L = lengths[:, None]
    return np.where(t < L, L - 1 - t, t)


def lstm_sequence(X, lengths, params: LSTMParams, reverse: bool = False) -> Tensor:
    """Run an LSTM over a right-padded batch ``X[B, T, D]``.

    Row ``b`` is valid for its first ``lengths[b]`` steps; outputs past that
    are zero.  With ``reverse`` each row's valid prefix is read backwards and
    outputs are returned in the original positions.  Forward and backward
    passes are fused (one graph node per call).
    """
    X = as_tensor(X)
    if X.ndim != 3 or X.shape[2] != params.input_dim:
        raise ShapeError(f"lstm_sequence: X{X.shape} for input {params.input_dim}")
    B, steps, _ = X.shape
    H = params.hidden
    lengths = np.asarray(lengths, dtype=np.intp)
    if lengths.shape != (B,) or lengths.min(initial=1) < 1 or lengths.max(initial=0) > steps:
        raise ShapeError(f"bad lengths {lengths.tolist()} for {steps} steps")
    rows = np.arange(B)[:, None]
    valid = np.arange(steps)[None, :] < lengths[:, None]
    tidx = _reverse_index(lengths, steps) if reverse else None

    Xd = X.data[rows, tidx] if reverse else X.data
    Wx, Wh = params.Wx.data, params.Wh.data
    XW = Xd @ Wx + params.b.data

    gates = np.empty((B, steps, 4 * H))
    cs = np.empty((B, steps + 1, H))
    hs = np.empty((B, steps + 1, H))
    tcs = np.empty((B, steps, H))
    cs[:, 0] = 0.0
    hs[:, 0] = 0.0
    for t in range(steps):
        z = XW[:, t] + hs[:, t] @ Wh
        a = gates[:, t]
        a[:, : 2 * H] = _sigmoid(z[:, : 2 * H])
        a[:, 2 * H : 3 * H] = np.tanh(z[:, 2 * H : 3 * H])
        a[:, 3 * H :] = _sigmoid(z[:, 3 * H :])
        cs[:, t + 1] = a[:, H : 2 * H] * cs[:, t] + a[:, :H] * a[:, 2 * H : 3 * H]
        tcs[:, t] = np.tanh(cs[:, t + 1])
        hs[:, t + 1] = a[:, 3 * H :] * tcs[:, t]
    out = hs[:, 1:] * valid[:, :, None]
    if reverse:
        out = out[rows, tidx]

    def bw(g):
        dH = (g[rows, tidx] if reverse else g) * valid[:, :, None]
        dZ = np.empty((B, steps, 4 * H))
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in range(steps - 1, -1, -1):
            a = gates[:, t]
            i, f, gg, o = a[:, :H], a[:, H : 2 * H], a[:, 2 * H : 3 * H], a[:, 3 * H :]
            tc = tcs[:, t]
            dh = dH[:, t] + dh_next
            dc = dh * o * (1.0 - tc * tc) + dc_next
            dz = dZ[:, t]
            dz[:, :H] = dc * gg * i * (1.0 - i)
            dz[:, H : 2 * H] = dc * cs[:, t] * f * (1.0 - f)
            dz[:, 2 * H : 3 * H] = dc * i * (1.0 - gg * gg)
            dz[:, 3 * H :] = dh * tc * o * (1.0 - o)
            dc_next = dc * f
            dh_next = dz @ Wh.T
        flatZ = dZ.reshape(-1, 4 * H)
        dWh = hs[:, :-1].reshape(-1, H).T @ flatZ
        dWx = Xd.reshape(-1, Xd.shape[-1]).T @ flatZ
        db = flatZ.sum(axis=0)
        dX = dZ @ Wx.T
        if reverse:
            restored = np.empty_like(dX)
            restored[rows, tidx] = dX
            dX = restored
        return dX, dWx, dWh, db

    return _make(out, (X, params.Wx, params.Wh, params.b), bw)


def bidirectional_lstm(X, lengths, fwd: LSTMParams, bwd: LSTMParams) -> Tensor:
    """Batched bidirectional LSTM; output ``[B, T, Hf + Hb]``."""
    return T.concat(
        [lstm_sequence(X, lengths, fwd), lstm_sequence(X, lengths, bwd, reverse=True)],
        axis=-1,
    )


def bidirectional_encode(xs: Sequence, fwd: LSTMParams, bwd: LSTMParams) -> list[Tensor]:
    """Encode one sequence of vectors; ``out[t] = fwd_h[t] ⊕ bwd_h[t]``."""
    if len(xs) == 0:
        raise ValueError("cannot encode an empty sequence")
    X = T.reshape(T.stack(list(xs)), (1, len(xs), -1))
    out = bidirectional_lstm(X, np.array([len(xs)]), fwd, bwd)
    return [T.getitem(out, (0, t)) for t in range(len(xs))]


# ---------------------------------------------------------------------------
# pooling and losses


def avg_pool(xs: Sequence) -> Tensor:
    """Componentwise mean of a non-empty sequence of vectors."""
    if len(xs) == 0:
        raise ValueError("cannot pool an empty sequence")
    return T.mean(T.stack(list(xs)), axis=0)


def window_weights(lengths: np.ndarray, starts: np.ndarray, ends: np.ndarray, steps: int) -> np.ndarray:
    """Rows of ``1/k`` over ``[start, end)`` for masked mean pooling."""
    t = np.arange(steps)[None, :]
    inside = (t >= starts[:, None]) & (t < ends[:, None])
    return inside / (ends - starts)[:, None]


def cross_entropy(probs, target, floor: float = 1e-12) -> Tensor:
    """``-log p[target]`` per row of a 2-D probability tensor."""
    return T.mul(T.log(T.pick(probs, target), floor), -1.0)


def binary_cross_entropy(probs, target, floor: float = 1e-12) -> Tensor:
    """Elementwise ``-(y log p + (1-y) log(1-p))``."""
    y = np.asarray(target, dtype=np.float64)
    probs = as_tensor(probs)
    pos = T.mul(T.log(probs, floor), y)
    neg = T.mul(T.log(T.sub(1.0, probs), floor), 1.0 - y)
    return T.mul(T.add(pos, neg), -1.0)


__all__ = [
    "Parameter",
    "LSTMParams",
    "lstm_cell",
    "lstm_sequence",
    "bidirectional_lstm",
    "bidirectional_encode",
    "avg_pool",
    "window_weights",
    "cross_entropy",
    "binary_cross_entropy",
    "glorot",
    "linear_params",
]
