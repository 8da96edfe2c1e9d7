"""Pure-numpy recurrence kernels (fallback backend).

Same contract as the compiled module ``fedwatt.model._kernels``: a gated
recurrent cell consuming one scalar input per step.  Gate order in the
stacked parameter arrays is [update, reset, candidate].

    z_t = sigmoid(x_t * wx[0] + h @ u[0].T + b[0])
    r_t = sigmoid(x_t * wx[1] + h @ u[1].T + b[1])
    c_t = tanh(x_t * wx[2] + (r_t * h) @ u[2].T + b[2])
    h_t = (1 - z_t) * c_t + z_t * h
"""

from __future__ import annotations

import numpy as np


def _sigmoid(a: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-a))


def gru_forward(wx, u, b, x):
    """Run the recurrence over x of shape (n, L); returns the final hidden state."""
    n, length = x.shape
    hidden = wx.shape[1]
    h = np.zeros((n, hidden))
    for t in range(length):
        xt = x[:, t, None]
        z = _sigmoid(xt * wx[0] + h @ u[0].T + b[0])
        r = _sigmoid(xt * wx[1] + h @ u[1].T + b[1])
        c = np.tanh(xt * wx[2] + (r * h) @ u[2].T + b[2])
        h = (1.0 - z) * c + z * h
    return h


def gru_forward_cached(wx, u, b, x):
    """Like :func:`gru_forward` but also returns per-step activations.

    Cache arrays have shape (L, n, H); ``hs[t]`` is the hidden state entering
    step t.
    """
    n, length = x.shape
    hidden = wx.shape[1]
    h = np.zeros((n, hidden))
    zs = np.empty((length, n, hidden))
    rs = np.empty((length, n, hidden))
    cs = np.empty((length, n, hidden))
    hs = np.empty((length, n, hidden))
    for t in range(length):
        hs[t] = h
        xt = x[:, t, None]
        z = _sigmoid(xt * wx[0] + h @ u[0].T + b[0])
        r = _sigmoid(xt * wx[1] + h @ u[1].T + b[1])
        c = np.tanh(xt * wx[2] + (r * h) @ u[2].T + b[2])
        zs[t], rs[t], cs[t] = z, r, c
        h = (1.0 - z) * c + z * h
    return h, (zs, rs, cs, hs)


def gru_backward(wx, u, x, cache, g_hlast):
    """Reverse-mode pass; returns (g_wx, g_u, g_b) for g of the final hidden state."""
    zs, rs, cs, hs = cache
    length = x.shape[1]
    g_wx = np.zeros_like(wx)
    g_u = np.zeros_like(u)
    g_b = np.zeros_like(wx)
    gh = np.array(g_hlast)
    for t in range(length - 1, -1, -1):
        z, r, c, h_prev = zs[t], rs[t], cs[t], hs[t]
        xt = x[:, t]
        gc = gh * (1.0 - z)
        gz = gh * (h_prev - c)
        gh_next = gh * z
        gac = gc * (1.0 - c * c)
        gaz = gz * z * (1.0 - z)
        g_wx[2] += gac.T @ xt
        g_u[2] += gac.T @ (r * h_prev)
        g_b[2] += gac.sum(axis=0)
        g_rh = gac @ u[2]
        gar = (g_rh * h_prev) * r * (1.0 - r)
        gh_next += g_rh * r
        g_wx[1] += gar.T @ xt
        g_u[1] += gar.T @ h_prev
        g_b[1] += gar.sum(axis=0)
        gh_next += gar @ u[1]
        g_wx[0] += gaz.T @ xt
        g_u[0] += gaz.T @ h_prev
        g_b[0] += gaz.sum(axis=0)
        gh_next += gaz @ u[0]
        gh = gh_next
    return g_wx, g_u, g_b
