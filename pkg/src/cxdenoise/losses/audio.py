"""Waveform-domain terms: L1, SDR, the bounded SDR loss and their sum."""
from __future__ import annotations

import math

import numpy as np

from ..ctensor import ShapeError, Tensor

SDR_UPPER = 20.0
SDR_CLAMP_DB = 60.0
_DB = 10.0 / math.log(10.0)


class UndefinedReferenceError(ValueError):
    """The clean reference is all zeros, so SDR has no meaning."""


def _samples(x) -> np.ndarray:
    if isinstance(x, Tensor):
        return x.data
    samples = getattr(x, "samples", x)
    return np.asarray(samples, dtype=np.float64)


def sdr(y_hat, y) -> float:
    """10 log10(||y||^2 / ||y_hat - y||^2) in dB; ``inf`` for an exact match."""
    est, ref = _samples(y_hat).astype(np.float64), _samples(y).astype(np.float64)
    if est.shape != ref.shape:
        raise ShapeError(f"estimate {est.shape} and reference {ref.shape} differ")
    signal = float(np.sum(ref * ref))
    if signal == 0.0:
        raise UndefinedReferenceError("reference signal is all zeros")
    noise = float(np.sum((est - ref) ** 2))
    if noise == 0.0:
        return math.inf
    return 10.0 * math.log10(signal / noise)


def sdr_tensor(y_hat: Tensor, y: Tensor, clamp_db: float = SDR_CLAMP_DB) -> tuple[Tensor, bool]:
    """Differentiable SDR of one clip (1-D or [C, L]); clamped at ``clamp_db``.

    Returns the value and whether the clamp fired.  A clamped SDR is a
    constant, so it contributes no gradient.
    """
    if y_hat.shape != y.shape:
        raise ShapeError(f"estimate {y_hat.shape} and reference {y.shape} differ")
    signal = float(np.sum(y.data.astype(np.float64) ** 2))
    if signal == 0.0:
        raise UndefinedReferenceError("reference signal is all zeros")
    err = y_hat - y
    noise = (err * err).sum()
    noise_val = float(noise.data)
    if noise_val == 0.0 or 10.0 * math.log10(signal / noise_val) > clamp_db:
        return Tensor(np.asarray(clamp_db, dtype=y_hat.dtype)), True
    return (noise.log() * -_DB) + _DB * math.log(signal), False


def l1_audio(y_hat: Tensor, y: Tensor) -> Tensor:
    if y_hat.shape != y.shape:
        raise ShapeError(f"estimate {y_hat.shape} and reference {y.shape} differ")
    return (y_hat - y).abs().mean()


def sdr_loss(y_hat: Tensor, y: Tensor, upper: float = SDR_UPPER) -> Tensor:
    """``upper - SDR``; negative once SDR passes ``upper``."""
    value, _ = sdr_tensor(y_hat, y)
    return upper - value


def reconstruction_loss(y_hat: Tensor, y: Tensor, upper: float = SDR_UPPER):
    """L1 + bounded SDR loss.  Returns (total, l_a, l_sdr, clamped)."""
    l_a = l1_audio(y_hat, y)
    value, clamped = sdr_tensor(y_hat, y)
    l_sdr = upper - value
    return l_a + l_sdr, l_a, l_sdr, clamped
