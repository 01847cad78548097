"""Complex (shifted-)window multi-head self-attention and the Swin block."""
from __future__ import annotations

import numpy as np

from ..ctensor import ComplexTensor, ShapeError, cmatmul
from ..ctensor.layers import CDropout, CLayerNorm, CLinear, CMLP, Module, csoftmax, trunc_normal

MASK_VALUE = -1e9


def relative_position_index(window: int) -> np.ndarray:
    """[M*M, M*M] indices into a (2M-1)^2 bias table."""
    coords = np.stack(np.meshgrid(np.arange(window), np.arange(window), indexing="ij"))
    flat = coords.reshape(2, -1)
    rel = flat[:, :, None] - flat[:, None, :]
    rel = rel.transpose(1, 2, 0) + (window - 1)
    return rel[..., 0] * (2 * window - 1) + rel[..., 1]


def shift_attention_mask(height: int, width: int, window: int, shift: int) -> np.ndarray:
    """Additive mask [nW, M*M, M*M] that blocks pairs wrapped by the cyclic shift."""
    label = np.zeros((height, width))
    cnt = 0
    spans = (slice(0, -window), slice(-window, -shift), slice(-shift, None))
    for hs in spans:
        for ws in spans:
            label[hs, ws] = cnt
            cnt += 1
    wins = (
        label.reshape(height // window, window, width // window, window)
        .transpose(0, 2, 1, 3)
        .reshape(-1, window * window)
    )
    diff = wins[:, None, :] - wins[:, :, None]
    return np.where(diff != 0, MASK_VALUE, 0.0)


def window_partition(x: ComplexTensor, window: int) -> ComplexTensor:
    """[N, H, W, C] -> [N * nW, M*M, C]."""
    n, h, w, c = x.shape
    x = x.reshape(n, h // window, window, w // window, window, c).transpose(0, 1, 3, 2, 4, 5)
    return x.reshape(-1, window * window, c)


def window_reverse(windows: ComplexTensor, window: int, h: int, w: int) -> ComplexTensor:
    c = windows.shape[-1]
    n = windows.shape[0] // ((h // window) * (w // window))
    x = windows.reshape(n, h // window, w // window, window, window, c).transpose(0, 1, 3, 2, 4, 5)
    return x.reshape(n, h, w, c)


class WindowAttention(Module):
    """softmax(Q K^T / sqrt(d) + B) V per window and head, all products complex.

    The relative position bias B is real and joins the real part of the
    scores.  ``K^T`` is a plain transpose (no conjugation).
    """

    def __init__(self, dim, window, heads, attn_drop=0.0, proj_drop=0.0, *, rng,
                 dtype=np.float32, centered=True, shared_mask=False):
        if dim % heads:
            raise ValueError(f"dim {dim} not divisible by {heads} heads")
        self.dim = dim
        self.window = window
        self.heads = heads
        self.scale = (dim // heads) ** -0.5
        self.centered = centered
        self.bias_table = trunc_normal(rng, ((2 * window - 1) ** 2, heads), 0.02, dtype)
        self.index = relative_position_index(window)
        self.qkv = CLinear(dim, 3 * dim, rng=rng, dtype=dtype, centered=centered)
        self.proj = CLinear(dim, dim, rng=rng, dtype=dtype, centered=centered)
        self.attn_drop = CDropout(attn_drop, rng=rng, shared_mask=shared_mask)
        self.proj_drop = CDropout(proj_drop, rng=rng, shared_mask=shared_mask)
        self.record = False
        self.last_attention: ComplexTensor | None = None

    def position_bias(self):
        n = self.window * self.window
        return self.bias_table[self.index.reshape(-1)].reshape(n, n, self.heads).transpose(2, 0, 1)

    def forward(self, x: ComplexTensor, mask: np.ndarray | None = None) -> ComplexTensor:
        b, n, c = x.shape
        if n != self.window * self.window or c != self.dim:
            raise ShapeError(f"expected windows of {self.window ** 2} x {self.dim}, got {x.shape}")
        d = c // self.heads
        qkv = self.qkv(x).reshape(b, n, 3, self.heads, d).transpose(2, 0, 3, 1, 4)
        q, k, v = qkv[0] * self.scale, qkv[1], qkv[2]
        scores = cmatmul(q, k.T)
        scores = ComplexTensor(scores.real + self.position_bias(), scores.imag)
        full_mask = None
        if mask is not None:
            nw = mask.shape[0]
            full_mask = np.tile(mask, (b // nw, 1, 1))[:, None].astype(x.dtype)
        attn = csoftmax(scores, -1, full_mask, centered=self.centered)
        if self.record:
            self.last_attention = attn.detach()
        attn = self.attn_drop(attn)
        out = cmatmul(attn, v).transpose(0, 2, 1, 3).reshape(b, n, c)
        return self.proj_drop(self.proj(out))


def cwindow_attention(z: ComplexTensor, attn: WindowAttention, resolution, shifted: bool) -> ComplexTensor:
    """Windowed attention over a token map [N, H*W, C], optionally shifted by M // 2."""
    h, w = resolution
    n, length, c = z.shape
    m = attn.window
    if length != h * w:
        raise ShapeError(f"token count {length} does not match resolution {h}x{w}")
    if h % m or w % m:
        raise ShapeError(f"resolution {h}x{w} not divisible by window {m}")
    shift = m // 2 if shifted and min(h, w) > m else 0
    x = z.reshape(n, h, w, c)
    if shift:
        x = x.roll((-shift, -shift), (1, 2))
    mask = shift_attention_mask(h, w, m, shift) if shift else None
    out = window_reverse(attn(window_partition(x, m), mask), m, h, w)
    if shift:
        out = out.roll((shift, shift), (1, 2))
    return out.reshape(n, h * w, c)


class SwinBlock(Module):
    """Z' = W-MSA(LN(Z)) + Z ; Z'' = MLP(LN(Z')) + Z'."""

    def __init__(self, dim, resolution, heads, window, shifted, mlp_ratio=4.0, drop=0.0,
                 attn_drop=0.0, *, rng, dtype=np.float32, centered=True, shared_mask=False):
        self.resolution = tuple(resolution)
        if min(self.resolution) <= window:
            window = min(self.resolution)
            shifted = False
        self.shifted = shifted
        self.norm1 = CLayerNorm(dim, dtype=dtype, centered=centered)
        self.attn = WindowAttention(dim, window, heads, attn_drop, drop, rng=rng, dtype=dtype,
                                    centered=centered, shared_mask=shared_mask)
        self.norm2 = CLayerNorm(dim, dtype=dtype, centered=centered)
        self.mlp = CMLP(dim, int(dim * mlp_ratio), drop, rng=rng, dtype=dtype, centered=centered,
                        shared_mask=shared_mask)

    def forward(self, z: ComplexTensor) -> ComplexTensor:
        z = z + cwindow_attention(self.norm1(z), self.attn, self.resolution, self.shifted)
        return z + self.mlp(self.norm2(z))


class SwinStage(Module):
    """``depth`` blocks alternating regular and shifted windows (pairs)."""

    def __init__(self, dim, resolution, depth, heads, window, mlp_ratio=4.0, drop=0.0,
                 attn_drop=0.0, *, rng, dtype=np.float32, centered=True, shared_mask=False):
        self.dim = dim
        self.resolution = tuple(resolution)
        self.blocks = [
            SwinBlock(dim, resolution, heads, window, shifted=(i % 2 == 1), mlp_ratio=mlp_ratio,
                      drop=drop, attn_drop=attn_drop, rng=rng, dtype=dtype, centered=centered,
                      shared_mask=shared_mask)
            for i in range(depth)
        ]

    def forward(self, z: ComplexTensor) -> ComplexTensor:
        for blk in self.blocks:
            z = blk(z)
        return z

