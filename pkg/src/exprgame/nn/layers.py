"""Layer primitives: 3x3 same-padding convolution, 2:1 max pooling, dense, relu, softmax.

All functions accept a single feature map (C, H, W) or a batch (B, C, H, W)
and preserve the input's floating dtype, so the same code runs the float32
production path and the float64 gradient-check path.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ContractError


def _batched(x):
    x = np.asarray(x)
    if x.ndim == 3:
        return x[None], True
    if x.ndim == 4:
        return x, False
    raise ContractError(f"expected (C,H,W) or (B,C,H,W) feature map, got shape {x.shape}")


def conv3x3_forward(x, kernels, bias):
    """Stride-1 convolution with 3x3 kernels and zero same-padding.

    kernels: (F, C, 3, 3), bias: (F,). Output spatial dims equal input dims;
    output channel count equals the filter count.
    """
    xb, squeeze = _batched(x)
    k = np.asarray(kernels)
    b = np.asarray(bias)
    if k.ndim != 4 or k.shape[2:] != (3, 3):
        raise ContractError(f"kernels must be (F, C, 3, 3), got {k.shape}")
    if k.shape[1] != xb.shape[1]:
        raise ContractError(f"kernel depth {k.shape[1]} != input channels {xb.shape[1]}")
    if b.shape != (k.shape[0],):
        raise ContractError(f"bias must be ({k.shape[0]},), got {b.shape}")
    B, C, H, W = xb.shape
    F = k.shape[0]
    xp = np.pad(xb, ((0, 0), (0, 0), (1, 1), (1, 1)))
    win = sliding_window_view(xp, (3, 3), axis=(2, 3))          # (B, C, H, W, 3, 3)
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(B * H * W, C * 9)
    y = cols @ k.reshape(F, C * 9).T + b
    y = y.reshape(B, H, W, F).transpose(0, 3, 1, 2)
    y = np.ascontiguousarray(y)
    return y[0] if squeeze else y


def conv3x3_backward(dy, x, kernels):
    """Gradients of conv3x3_forward w.r.t. input, kernels and bias."""
    dyb, _ = _batched(dy)
    xb, squeeze = _batched(x)
    k = np.asarray(kernels)
    B, C, H, W = xb.shape
    F = k.shape[0]
    xp = np.pad(xb, ((0, 0), (0, 0), (1, 1), (1, 1)))
    win = sliding_window_view(xp, (3, 3), axis=(2, 3))
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(B * H * W, C * 9)
    dy_mat = dyb.transpose(0, 2, 3, 1).reshape(B * H * W, F)
    db = dy_mat.sum(axis=0)
    dk = (dy_mat.T @ cols).reshape(F, C, 3, 3)
    dcols = (dy_mat @ k.reshape(F, C * 9)).reshape(B, H, W, C, 3, 3)
    dxp = np.zeros_like(xp)
    for i in range(3):
        for j in range(3):
            dxp[:, :, i:i + H, j:j + W] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    dx = dxp[:, :, 1:H + 1, 1:W + 1]
    return (dx[0] if squeeze else dx), dk, db


_POOL_OFFSETS = ((0, 0), (0, 1), (1, 0), (1, 1))


def maxpool2_forward(x):
    """2:1 max pooling: halves each spatial dimension. Requires even dims."""
    xb, squeeze = _batched(x)
    H, W = xb.shape[2:]
    if H % 2 or W % 2:
        raise ContractError(f"maxpool2 needs even spatial dims, got {H}x{W}")
    y = np.maximum(
        np.maximum(xb[:, :, 0::2, 0::2], xb[:, :, 0::2, 1::2]),
        np.maximum(xb[:, :, 1::2, 0::2], xb[:, :, 1::2, 1::2]))
    return y[0] if squeeze else y


def maxpool2_backward(dy, x):
    """Routes each output gradient to the argmax cell of its 2x2 block (ties: first)."""
    dyb, _ = _batched(dy)
    xb, squeeze = _batched(x)
    y = maxpool2_forward(xb)
    dx = np.zeros_like(xb)
    taken = np.zeros(y.shape, dtype=bool)
    for di, dj in _POOL_OFFSETS:
        cell = xb[:, :, di::2, dj::2]
        hit = (cell == y) & ~taken
        dx[:, :, di::2, dj::2] = dyb * hit
        taken |= hit
    return dx[0] if squeeze else dx


def relu_forward(x):
    return np.maximum(x, 0)


def relu_backward(dy, x):
    return dy * (np.asarray(x) > 0)


def dense_forward(x, matrix, bias):
    """Affine map matrix . x + bias; matrix is (units, inputs)."""
    v = np.asarray(x)
    m = np.asarray(matrix)
    b = np.asarray(bias)
    if m.ndim != 2:
        raise ContractError(f"dense matrix must be 2-D, got shape {m.shape}")
    if v.shape[-1] != m.shape[1]:
        raise ContractError(f"dense input length {v.shape[-1]} != matrix columns {m.shape[1]}")
    if b.shape != (m.shape[0],):
        raise ContractError(f"dense bias must be ({m.shape[0]},), got {b.shape}")
    return v @ m.T + b


def dense_backward(dy, x, matrix):
    dyb = np.atleast_2d(np.asarray(dy))
    xb = np.atleast_2d(np.asarray(x))
    dm = dyb.T @ xb
    db = dyb.sum(axis=0)
    dx = dyb @ np.asarray(matrix)
    if np.asarray(dy).ndim == 1:
        dx = dx[0]
    return dx, dm, db


def softmax(logits):
    """Numerically stabilized softmax over the last axis."""
    z = np.asarray(logits)
    if not np.all(np.isfinite(z)):
        raise ContractError("softmax input contains non-finite values")
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)
