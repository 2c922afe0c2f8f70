"""Network layers over (batch, channels, frames) maps, with hand-written backward.

Every layer caches what its backward pass needs during a training-mode
forward. Gradients are written into d-prefixed attributes (dw, db, dgamma,
...) on each backward call; layers are used once per pass, so grads are
assigned, not accumulated.
"""

from __future__ import annotations

import numpy as np


def conv1d_dilated(x, w, b, dilation: int):
    """Same-length dilated convolution.

    out[n, c, f] = b[c] + sum over c_in, k of w[c, c_in, k] * x[n, c_in, f + (k - half)*dilation]
    with zero padding outside [0, frames).
    """
    n_b, _, n_f = x.shape
    taps = w.shape[2]
    half = (taps - 1) // 2
    out = np.empty((n_b, w.shape[0], n_f), dtype=x.dtype)
    out[:] = b[None, :, None]
    for k in range(taps):
        off = (k - half) * dilation
        length = n_f - abs(off)
        if length <= 0:
            continue
        s0 = max(0, off)
        t0 = max(0, -off)
        contrib = np.tensordot(w[:, :, k], x[:, :, s0 : s0 + length], axes=([1], [1]))
        out[:, :, t0 : t0 + length] += np.moveaxis(contrib, 0, 1)
    return out


def conv1d_dilated_backward(x, w, grad, dilation: int):
    """Gradients of conv1d_dilated: returns (dw, db, dx)."""
    n_f = x.shape[2]
    taps = w.shape[2]
    half = (taps - 1) // 2
    db = grad.sum(axis=(0, 2))
    dw = np.zeros_like(w)
    dx = np.zeros_like(x)
    for k in range(taps):
        off = (k - half) * dilation
        length = n_f - abs(off)
        if length <= 0:
            continue
        s0 = max(0, off)
        t0 = max(0, -off)
        g = grad[:, :, t0 : t0 + length]
        xs = x[:, :, s0 : s0 + length]
        dw[:, :, k] = np.tensordot(g, xs, axes=([0, 2], [0, 2]))
        dxs = np.tensordot(w[:, :, k], g, axes=([0], [1]))
        dx[:, :, s0 : s0 + length] += np.moveaxis(dxs, 0, 1)
    return dw, db, dx


class Conv1d:
    """Dilated 1-D convolution; taps=1 gives a pointwise (1x1) channel mix."""

    param_names = ("w", "b")
    state_names = ()

    def __init__(self, in_ch, out_ch, taps=3, dilation=1, rng=None, dtype=np.float32):
        if taps < 1 or taps % 2 == 0:
            raise ValueError(f"taps must be odd and positive, got {taps}")
        if dilation < 1:
            raise ValueError(f"dilation must be >= 1, got {dilation}")
        if rng is None:
            rng = np.random.default_rng(0)
        bound = 1.0 / np.sqrt(in_ch * taps)
        self.w = rng.uniform(-bound, bound, size=(out_ch, in_ch, taps)).astype(dtype)
        self.b = np.zeros(out_ch, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self.dilation = int(dilation)
        self._x = None

    def forward(self, x, training=True):
        if x.ndim != 3 or x.shape[1] != self.w.shape[1]:
            raise ValueError(
                f"expected (batch, {self.w.shape[1]}, frames), got {x.shape}"
            )
        if x.dtype != self.w.dtype:
            raise ValueError(f"input dtype {x.dtype} != layer dtype {self.w.dtype}")
        self._x = x if training else None
        return conv1d_dilated(x, self.w, self.b, self.dilation)

    def backward(self, grad):
        if self._x is None:
            raise RuntimeError("backward without a training-mode forward")
        self.dw, self.db, dx = conv1d_dilated_backward(self._x, self.w, grad, self.dilation)
        return dx


class BatchNorm1d:
    """Per-channel batch normalization over the (batch, frames) axes."""

    param_names = ("gamma", "beta")
    state_names = ("running_mean", "running_var")

    def __init__(self, channels, eps=1e-5, momentum=0.1, dtype=np.float32):
        self.gamma = np.ones(channels, dtype=dtype)
        self.beta = np.zeros(channels, dtype=dtype)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self.eps = float(eps)
        self.momentum = float(momentum)
        self.dgamma = np.zeros_like(self.gamma)
        self.dbeta = np.zeros_like(self.beta)
        self._cache = None

    def forward(self, x, training=True):
        if training:
            mu = x.mean(axis=(0, 2))
            var = x.var(axis=(0, 2))
            m = self.momentum
            self.running_mean = ((1.0 - m) * self.running_mean + m * mu).astype(x.dtype)
            self.running_var = ((1.0 - m) * self.running_var + m * var).astype(x.dtype)
        else:
            mu = self.running_mean
            var = self.running_var
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mu[None, :, None]) * inv[None, :, None]
        self._cache = (xhat, inv.astype(x.dtype)) if training else None
        return self.gamma[None, :, None] * xhat + self.beta[None, :, None]

    def backward(self, grad):
        if self._cache is None:
            raise RuntimeError("backward without a training-mode forward")
        xhat, inv = self._cache
        self.dgamma = (grad * xhat).sum(axis=(0, 2))
        self.dbeta = grad.sum(axis=(0, 2))
        gx = grad * self.gamma[None, :, None]
        mean_gx = gx.mean(axis=(0, 2), keepdims=True)
        mean_gx_xhat = (gx * xhat).mean(axis=(0, 2), keepdims=True)
        return inv[None, :, None] * (gx - mean_gx - xhat * mean_gx_xhat)


class ReLU:
    param_names = ()
    state_names = ()

    def forward(self, x, training=True):
        self._mask = (x > 0) if training else None
        return np.maximum(x, 0)

    def backward(self, grad):
        if self._mask is None:
            raise RuntimeError("backward without a training-mode forward")
        return grad * self._mask


class Identity:
    param_names = ()
    state_names = ()

    def forward(self, x, training=True):
        return x

    def backward(self, grad):
        return grad
