"""Forward/backward primitives on NHWC arrays.

Convolutions use TensorFlow-style "same" padding so that a stride-``s``
layer maps ``H`` to ``ceil(H / s)``. Kernels have shape ``(3, 3, Cin, Cout)``.
"""
from __future__ import annotations

import math

import numpy as np

BN_EPS = 1e-5


def same_padding(size: int, stride: int, kernel: int = 3) -> tuple[int, int, int]:
    """(output size, pad before, pad after) for one spatial axis."""
    out = math.ceil(size / stride)
    total = max((out - 1) * stride + kernel - size, 0)
    return out, total // 2, total - total // 2


def conv_output_shape(h: int, w: int, stride: int) -> tuple[int, int]:
    return same_padding(h, stride)[0], same_padding(w, stride)[0]


def conv_forward(x: np.ndarray, weight: np.ndarray, stride: int):
    N, H, W, Cin = x.shape
    kh, kw, _, Cout = weight.shape
    Ho, pt, pb = same_padding(H, stride, kh)
    Wo, pl, pr = same_padding(W, stride, kw)
    xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    cols = np.empty((N, Ho, Wo, kh * kw, Cin), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, :, i * kw + j, :] = xp[:, i:i + stride * (Ho - 1) + 1:stride, j:j + stride * (Wo - 1) + 1:stride, :]
    cols = cols.reshape(N * Ho * Wo, kh * kw * Cin)
    out = cols @ weight.reshape(kh * kw * Cin, Cout)
    cache = (cols, x.shape, weight, stride, (pt, pl), xp.shape)
    return out.reshape(N, Ho, Wo, Cout), cache


def conv_backward(dout: np.ndarray, cache, need_dx: bool = True):
    cols, x_shape, weight, stride, (pt, pl), xp_shape = cache
    kh, kw, Cin, Cout = weight.shape
    N, Ho, Wo, _ = dout.shape
    d2 = dout.reshape(-1, Cout)
    dweight = (cols.T @ d2).reshape(weight.shape)
    if not need_dx:
        return None, dweight
    dcols = (d2 @ weight.reshape(-1, Cout).T).reshape(N, Ho, Wo, kh * kw, Cin)
    dxp = np.zeros(xp_shape, dtype=dout.dtype)
    for i in range(kh):
        for j in range(kw):
            dxp[:, i:i + stride * (Ho - 1) + 1:stride, j:j + stride * (Wo - 1) + 1:stride, :] += dcols[:, :, :, i * kw + j, :]
    H, W = x_shape[1], x_shape[2]
    return dxp[:, pt:pt + H, pl:pl + W, :], dweight


def batchnorm_forward(x, gamma, beta, mode: str, running_mean=None, running_var=None):
    if mode == "train":
        mean = x.mean(axis=(0, 1, 2))
        var = x.var(axis=(0, 1, 2))
    else:
        mean, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + BN_EPS)
    xhat = (x - mean) * inv_std
    out = xhat * gamma + beta
    return out, (xhat, inv_std, gamma, mean, var)


def batchnorm_backward(dout, cache, mode: str = "train"):
    xhat, inv_std, gamma, _, _ = cache
    dgamma = (dout * xhat).sum(axis=(0, 1, 2))
    dbeta = dout.sum(axis=(0, 1, 2))
    dxhat = dout * gamma
    if mode != "train":
        return dxhat * inv_std, dgamma, dbeta
    m = dout.shape[0] * dout.shape[1] * dout.shape[2]
    dx = (inv_std / m) * (m * dxhat - dxhat.sum(axis=(0, 1, 2)) - xhat * (dxhat * xhat).sum(axis=(0, 1, 2)))
    return dx, dgamma, dbeta


def dropout_mask(shape, p: float, rng: np.random.Generator, dtype) -> np.ndarray:
    """Inverted-dropout multiplier: 0 with probability p, else 1 / (1 - p)."""
    dtype = np.dtype(dtype)
    keep = rng.random(shape, dtype=np.float32 if dtype == np.float32 else np.float64) >= p
    return keep.astype(dtype) * dtype.type(1.0 / (1.0 - p))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean softmax cross-entropy and its gradient w.r.t. the logits."""
    n = len(labels)
    z = logits - logits.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -log_probs[np.arange(n), labels].mean()
    grad = np.exp(log_probs)
    grad[np.arange(n), labels] -= 1.0
    return float(loss), grad / n
