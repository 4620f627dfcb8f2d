"""Pure-numpy LSTM sequence kernels (fallback for the compiled core).

Gate layout along the 4H axis: input, forget, output, candidate.
All arrays are float64 and C-contiguous; `gates` stores post-activation
values so the backward pass can reuse them.
"""

import numpy as np


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def lstm_forward_kernel(x, wx, wh, b, gates, c, h):
    """Fill gates/c/h in place; x is (B, T, I), weights are (4H, *)."""
    B, T, _ = x.shape
    H = wh.shape[1]
    h_prev = np.zeros((B, H))
    c_prev = np.zeros((B, H))
    for t in range(T):
        a = x[:, t] @ wx.T + h_prev @ wh.T + b
        i = _sigmoid(a[:, :H])
        f = _sigmoid(a[:, H : 2 * H])
        o = _sigmoid(a[:, 2 * H : 3 * H])
        g = np.tanh(a[:, 3 * H :])
        c_t = f * c_prev + i * g
        h_t = o * np.tanh(c_t)
        gates[:, t, :H] = i
        gates[:, t, H : 2 * H] = f
        gates[:, t, 2 * H : 3 * H] = o
        gates[:, t, 3 * H :] = g
        c[:, t] = c_t
        h[:, t] = h_t
        h_prev, c_prev = h_t, c_t


def lstm_backward_kernel(x, wx, wh, gates, c, h, dh_final, dwx, dwh, db, dx):
    """Backprop through time from a gradient on the final hidden state.

    Accumulates into dwx/dwh/db (callers pass zeroed buffers) and fills dx.
    """
    B, T, _ = x.shape
    H = wh.shape[1]
    dh = dh_final.copy()
    dc = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        i = gates[:, t, :H]
        f = gates[:, t, H : 2 * H]
        o = gates[:, t, 2 * H : 3 * H]
        g = gates[:, t, 3 * H :]
        c_prev = c[:, t - 1] if t > 0 else np.zeros((B, H))
        h_prev = h[:, t - 1] if t > 0 else np.zeros((B, H))
        tanh_c = np.tanh(c[:, t])

        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c * tanh_c)
        di = dc * g
        dg = dc * i
        df = dc * c_prev

        da = np.empty((B, 4 * H))
        da[:, :H] = di * i * (1.0 - i)
        da[:, H : 2 * H] = df * f * (1.0 - f)
        da[:, 2 * H : 3 * H] = do * o * (1.0 - o)
        da[:, 3 * H :] = dg * (1.0 - g * g)

        dwx += da.T @ x[:, t]
        dwh += da.T @ h_prev
        db += da.sum(axis=0)
        dx[:, t] = da @ wx
        dh = da @ wh
        dc = dc * f
