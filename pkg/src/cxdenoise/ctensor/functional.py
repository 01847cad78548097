"""Real-valued convolution and resampling primitives used by the lifted layers."""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .autograd import ShapeError, Tensor, matmul


def unfold(x: Tensor, kernel: int, stride: int = 1, padding: int = 0) -> Tensor:
    """im2col: [N, C, H, W] -> [N, Ho*Wo, C*k*k]."""
    if x.ndim != 4:
        raise ShapeError(f"unfold expects [N, C, H, W], got {x.shape}")
    n, c, h, w = x.shape
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    hp, wp = xp.shape[2:]
    if hp < kernel or wp < kernel:
        raise ShapeError(f"kernel {kernel} larger than padded input {hp}x{wp}")
    win = sliding_window_view(xp, (kernel, kernel), axis=(2, 3))[:, :, ::stride, ::stride]
    ho, wo = win.shape[2:4]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n, ho * wo, c * kernel * kernel)

    def bw(g):
        g = g.reshape(n, ho, wo, c, kernel, kernel)
        full = np.zeros((n, c, hp, wp), dtype=x.dtype)
        for i in range(kernel):
            for j in range(kernel):
                full[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += g[
                    :, :, :, :, i, j
                ].transpose(0, 3, 1, 2)
        x._accumulate(full[:, :, padding : padding + h, padding : padding + w])

    return Tensor._make(np.ascontiguousarray(cols), (x,), bw)


def conv2d(x: Tensor, weight: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation with ``weight`` of shape [C_out, C_in, k, k], no bias."""
    c_out, c_in, k, _ = weight.shape
    if x.shape[1] != c_in:
        raise ShapeError(f"conv2d expects {c_in} input channels, got {x.shape[1]}")
    n, _, h, w = x.shape
    ho = (h + 2 * padding - k) // stride + 1
    wo = (w + 2 * padding - k) // stride + 1
    cols = unfold(x, k, stride, padding)
    out = matmul(cols, weight.reshape(c_out, c_in * k * k).T)
    return out.transpose(0, 2, 1).reshape(n, c_out, ho, wo)


def max_pool2d(x: Tensor, size: int = 2) -> Tensor:
    n, c, h, w = x.shape
    if h % size or w % size:
        raise ShapeError(f"max_pool2d needs spatial dims divisible by {size}, got {h}x{w}")
    t = x.reshape(n, c, h // size, size, w // size, size).transpose(0, 1, 2, 4, 3, 5)
    return t.reshape(n, c, h // size, w // size, size * size).max(axis=-1)


def upsample_nearest(x: Tensor, factor: int = 2) -> Tensor:
    n, c, h, w = x.shape
    ones = Tensor(np.ones((1, 1, 1, factor, 1, factor), dtype=x.dtype))
    t = x.reshape(n, c, h, 1, w, 1) * ones
    return t.reshape(n, c, h * factor, w * factor)


def linear_resize_matrix(n_in: int, n_out: int, dtype=np.float64) -> np.ndarray:
    """Row-stochastic [n_out, n_in] matrix of 1-D linear interpolation.

    Uses the half-pixel convention (output sample centres mapped onto input
    sample centres, clamped at the borders), the usual bilinear resize without
    anti-aliasing.  Identity when ``n_in == n_out``.
    """
    if n_in == n_out:
        return np.eye(n_in, dtype=dtype)
    pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    pos = np.clip(pos, 0, n_in - 1)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = pos - lo
    m = np.zeros((n_out, n_in), dtype=dtype)
    rows = np.arange(n_out)
    np.add.at(m, (rows, lo), 1 - frac)
    np.add.at(m, (rows, hi), frac)
    return m
