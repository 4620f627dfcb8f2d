"""Dense and LSTM layers with exact analytic gradients, losses, and Adam.

Everything is float64 and deterministic given a seed. Non-finite values are
hard errors: silent NaN propagation is the classic failure mode at this
model scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteValue, ShapeMismatch
from . import backend

ACTIVATIONS = ("linear", "relu", "sigmoid", "tanh", "softmax")


def _check_finite(name: str, *arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteValue(f"non-finite values in {name}")


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


class DenseLayer:
    """Fully connected layer y = act(W x + b), W is (out, in)."""

    def __init__(self, in_dim: int, out_dim: int, activation: str = "linear",
                 rng: np.random.Generator | None = None):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.activation = activation
        if rng is None:
            self.w = np.zeros((out_dim, in_dim))
        else:
            self.w = glorot_uniform(rng, out_dim, in_dim)
        self.b = np.zeros(out_dim)

    def params(self) -> list[np.ndarray]:
        return [self.w, self.b]

    def forward(self, x: np.ndarray):
        """Returns (activations, cache) for a (batch, in_dim) input."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.in_dim:
            raise ShapeMismatch(f"expected input dim {self.in_dim}, got {x.shape[1]}")
        pre = x @ self.w.T + self.b
        if self.activation == "linear":
            out = pre
        elif self.activation == "relu":
            out = np.maximum(pre, 0.0)
        elif self.activation == "sigmoid":
            out = 1.0 / (1.0 + np.exp(-np.clip(pre, -500, 500)))
        elif self.activation == "tanh":
            out = np.tanh(pre)
        else:
            out = softmax(pre)
        _check_finite("dense forward", out)
        return out, (x, pre, out)

    def backward(self, cache, upstream: np.ndarray):
        """Returns ((dW, db), dx)."""
        x, pre, out = cache
        upstream = np.asarray(upstream, dtype=np.float64)
        if upstream.shape != out.shape:
            raise ShapeMismatch("upstream gradient shape mismatch")
        if self.activation == "linear":
            dpre = upstream
        elif self.activation == "relu":
            dpre = upstream * (pre > 0)
        elif self.activation == "sigmoid":
            dpre = upstream * out * (1.0 - out)
        elif self.activation == "tanh":
            dpre = upstream * (1.0 - out * out)
        else:  # softmax jacobian-vector product
            dpre = out * (upstream - (upstream * out).sum(axis=1, keepdims=True))
        dw = dpre.T @ x
        db = dpre.sum(axis=0)
        dx = dpre @ self.w
        _check_finite("dense backward", dw, db, dx)
        return (dw, db), dx


class LstmCell:
    """Single-layer LSTM run over a full sequence; exposes the final hidden
    state only. Gate layout along the 4H axis: input, forget, output,
    candidate."""

    def __init__(self, input_size: int, hidden_size: int,
                 rng: np.random.Generator | None = None):
        self.input_size = input_size
        self.hidden_size = hidden_size
        H = hidden_size
        if rng is None:
            self.wx = np.zeros((4 * H, input_size))
            self.wh = np.zeros((4 * H, H))
        else:
            self.wx = glorot_uniform(rng, 4 * H, input_size)
            self.wh = glorot_uniform(rng, 4 * H, H)
        self.b = np.zeros(4 * H)

    def params(self) -> list[np.ndarray]:
        return [self.wx, self.wh, self.b]

    def forward(self, x: np.ndarray):
        """x is (batch, T, input_size); returns (h_final, cache)."""
        x = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
        if x.ndim == 2:
            x = x[None]
        if x.ndim != 3 or x.shape[2] != self.input_size:
            raise ShapeMismatch(f"expected (batch, T, {self.input_size}) input")
        B, T, _ = x.shape
        H = self.hidden_size
        gates = np.empty((B, T, 4 * H))
        c = np.empty((B, T, H))
        h = np.empty((B, T, H))
        backend.lstm_forward_kernel(x, self.wx, self.wh, self.b, gates, c, h)
        h_final = h[:, -1].copy()
        _check_finite("lstm forward", h_final)
        return h_final, (x, gates, c, h)

    def backward(self, cache, upstream: np.ndarray):
        """upstream is the gradient on the final hidden state (batch, H).
        Returns ((dWx, dWh, db), dx)."""
        x, gates, c, h = cache
        B, T, _ = x.shape
        H = self.hidden_size
        upstream = np.ascontiguousarray(np.asarray(upstream, dtype=np.float64))
        if upstream.shape != (B, H):
            raise ShapeMismatch("upstream gradient shape mismatch")
        dwx = np.zeros_like(self.wx)
        dwh = np.zeros_like(self.wh)
        db = np.zeros_like(self.b)
        dx = np.empty_like(x)
        backend.lstm_backward_kernel(x, self.wx, self.wh, gates, c, h,
                                     upstream, dwx, dwh, db, dx)
        _check_finite("lstm backward", dwx, dwh, db, dx)
        return (dwx, dwh, db), dx


def softmax_xent(logits: np.ndarray, onehot: np.ndarray):
    """Mean cross-entropy of softmax(logits) against one-hot labels.

    Returns (loss, grad wrt logits); grad is (p - y) / batch.
    """
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    onehot = np.atleast_2d(np.asarray(onehot, dtype=np.float64))
    if logits.shape != onehot.shape:
        raise ShapeMismatch("logits/labels shape mismatch")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_z
    loss = -float((onehot * log_p).sum()) / logits.shape[0]
    grad = (np.exp(log_p) - onehot) / logits.shape[0]
    return loss, grad


def mse_loss(pred: np.ndarray, targets: np.ndarray):
    """Mean squared error; grad = 2 (pred - target) / batch."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    targets = np.asarray(targets, dtype=np.float64).ravel()
    if pred.shape != targets.shape:
        raise ShapeMismatch("prediction/target length mismatch")
    diff = pred - targets
    loss = float(np.mean(diff * diff))
    grad = 2.0 * diff / pred.size
    return loss, grad


@dataclass
class AdamState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params: list[np.ndarray], lr: float) -> "AdamState":
        return cls(lr=lr,
                   m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])


def adam_update(params: list[np.ndarray], grads: list[np.ndarray],
                state: AdamState) -> None:
    """One Adam step with bias correction; updates params in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeMismatch("params/grads/state arity mismatch")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ShapeMismatch("gradient shape does not mirror parameter")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
