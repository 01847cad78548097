"""Image-domain losses: L1, SSIM and a feature-space ("detail") L1."""
from __future__ import annotations

from typing import Protocol

import numpy as np

from ..ctensor import ComplexTensor, ShapeError, Tensor, cabs, no_grad
from ..ctensor.functional import conv2d

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
K1, K2 = 0.01, 0.03
MIN_RANGE = 1e-3
KINDS = ("real", "imag", "abs")


def _check_same(pred: Tensor, truth: Tensor) -> None:
    if pred.shape != truth.shape:
        raise ShapeError(f"prediction {pred.shape} and target {truth.shape} differ")


def l1_image(pred: Tensor, truth: Tensor) -> Tensor:
    """Mean absolute difference."""
    _check_same(pred, truth)
    return (pred - truth).abs().mean()


def gaussian_filter_matrix(n: int, size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA,
                           dtype=np.float64) -> np.ndarray:
    """[n - size + 1, n] matrix applying a normalised 1-D Gaussian, 'valid' mode."""
    g = np.exp(-0.5 * ((np.arange(size) - (size - 1) / 2) / sigma) ** 2)
    g /= g.sum()
    m = np.zeros((n - size + 1, n), dtype=dtype)
    for i in range(n - size + 1):
        m[i, i : i + size] = g
    return m


def _as_4d(t: Tensor) -> Tensor:
    if t.ndim == 2:
        return t.reshape(1, 1, *t.shape)
    if t.ndim == 3:
        return t.reshape(1, *t.shape)
    return t


def ssim_map(x: Tensor, y: Tensor, data_range) -> Tensor:
    """Local SSIM over 11x11 Gaussian windows; x, y are [N, C, H, W].

    ``data_range`` is a scalar or an array broadcastable to [N, 1, 1, 1].
    """
    h, w = x.shape[-2:]
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise ShapeError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}")
    gh = Tensor(gaussian_filter_matrix(h, dtype=x.dtype))
    gw = Tensor(gaussian_filter_matrix(w, dtype=x.dtype).T)

    def filt(t):
        return gh @ t @ gw

    r = np.asarray(data_range, dtype=x.dtype)
    c1 = (K1 * r) ** 2
    c2 = (K2 * r) ** 2
    mu_x, mu_y = filt(x), filt(y)
    mu_xx, mu_yy, mu_xy = mu_x * mu_x, mu_y * mu_y, mu_x * mu_y
    s_xx = filt(x * x) - mu_xx
    s_yy = filt(y * y) - mu_yy
    s_xy = filt(x * y) - mu_xy
    num = (2 * mu_xy + c1) * (2 * s_xy + c2)
    den = (mu_xx + mu_yy + c1) * (s_xx + s_yy + c2)
    return num / den


def _range(*arrays: np.ndarray) -> np.ndarray:
    """Per-sample dynamic range max - min over the given arrays, floored."""
    stacked = np.concatenate([a.reshape(a.shape[0], -1) for a in arrays], axis=1)
    r = stacked.max(axis=1) - stacked.min(axis=1)
    return np.maximum(r, MIN_RANGE).reshape(-1, 1, 1, 1)


def ssim(x: Tensor, y: Tensor, data_range=None) -> Tensor:
    """Mean SSIM.  Without ``data_range`` it is the joint range of both images.

    The joint range keeps the metric symmetric; it is treated as a constant
    (no gradient flows through it).
    """
    _check_same(x, y)
    x, y = _as_4d(x), _as_4d(y)
    if data_range is None:
        data_range = _range(x.data, y.data)
    return ssim_map(x, y, data_range).mean()


def ssim_loss(pred: Tensor, truth: Tensor) -> Tensor:
    """1 - SSIM with the dynamic range taken from ``truth`` per sample."""
    _check_same(pred, truth)
    pred, truth = _as_4d(pred), _as_4d(truth)
    return 1.0 - ssim_map(pred, truth, _range(truth.data)).mean()


class FeatureExtractor(Protocol):
    def __call__(self, images: Tensor) -> Tensor:
        """[N, C, H, W] real images -> [N, D] feature vectors."""


def _adaptive_pool_matrix(n_in: int, n_out: int, dtype) -> np.ndarray:
    m = np.zeros((n_out, n_in), dtype=dtype)
    for i in range(n_out):
        lo = (i * n_in) // n_out
        hi = -((-(i + 1) * n_in) // n_out)
        m[i, lo:hi] = 1.0 / (hi - lo)
    return m


class RandomConvFeatures:
    """Fixed, seeded conv stack standing in for a pretrained perceptual network.

    Three stride-2 and one stride-1 3x3 convolutions with GELU, adaptive
    average pooling to ``pool`` x ``pool``, then a fixed fully connected
    projection.  Nothing here is trained.
    """

    def __init__(self, in_channels: int = 1, widths=(8, 16, 32, 32), pool: int = 4,
                 out_dim: int = 128, seed: int = 0, dtype=np.float32):
        rng = np.random.default_rng(seed)
        self.strides = (2, 2, 2, 1)
        self.weights = []
        c = in_channels
        for wdt in widths:
            std = np.sqrt(2.0 / (c * 9))
            self.weights.append(Tensor(rng.normal(0, std, (wdt, c, 3, 3)).astype(dtype)))
            c = wdt
        self.pool = pool
        fan_in = c * pool * pool
        self.fc = Tensor(rng.normal(0, 1 / np.sqrt(fan_in), (fan_in, out_dim)).astype(dtype))
        self.dtype = np.dtype(dtype)

    def __call__(self, images: Tensor) -> Tensor:
        x = _as_4d(images)
        if x.dtype != self.dtype:
            self.weights = [Tensor(w.data.astype(x.dtype)) for w in self.weights]
            self.fc = Tensor(self.fc.data.astype(x.dtype))
            self.dtype = x.dtype
        for w, s in zip(self.weights, self.strides):
            x = conv2d(x, w, stride=s, padding=1).gelu()
        n, c, h, wd = x.shape
        ph = Tensor(_adaptive_pool_matrix(h, self.pool, x.dtype))
        pw = Tensor(_adaptive_pool_matrix(wd, self.pool, x.dtype).T)
        x = (ph @ x @ pw).reshape(n, c * self.pool * self.pool)
        return x @ self.fc


def detail_loss(pred: Tensor, truth: Tensor, fe: FeatureExtractor) -> Tensor:
    """Mean L1 between feature vectors; the target side carries no gradient."""
    _check_same(pred, truth)
    with no_grad():
        target = fe(truth.detach())
    return (fe(pred) - target).abs().mean()


def image_views(z: ComplexTensor) -> dict[str, Tensor]:
    return {"real": z.real, "imag": z.imag, "abs": cabs(z)}


def image_loss(pred: ComplexTensor, truth: ComplexTensor, fe: FeatureExtractor):
    """Sum over real/imag/abs views of L1 + (1 - SSIM) + detail loss.

    Returns the total and a dict of the nine terms keyed ``l_f_real`` etc.
    """
    if pred.shape != truth.shape:
        raise ShapeError(f"prediction {pred.shape} and target {truth.shape} differ")
    p_views = image_views(pred)
    with no_grad():
        t_views = image_views(truth.detach())
    terms = {}
    total = None
    for kind in KINDS:
        p, t = p_views[kind], t_views[kind]
        parts = {
            f"l_f_{kind}": l1_image(p, t),
            f"l_s_{kind}": ssim_loss(p, t),
            f"l_d_{kind}": detail_loss(p, t, fe),
        }
        for key, val in parts.items():
            terms[key] = val
            total = val if total is None else total + val
    return total, terms
