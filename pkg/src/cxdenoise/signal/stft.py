"""Audio <-> fixed-size complex spectrogram image.

Framing follows the usual centred convention: the clip is reflect-padded by
``n_fft // 2`` on both sides and frame ``t`` is centred on sample
``t * hop``, giving ``1 + (len - 1) // hop`` frames.  The hop is
``len // image_size``, so every clip yields roughly ``image_size`` frames
regardless of duration.

Phase is referenced to absolute sample time rather than to each frame's
start.  A stationary tone then has a constant phase along a row, which keeps
the time-axis bilinear resize close to lossless; with frame-local phase the
row rotates by ``2*pi*k*hop/n_fft`` per frame and interpolating between
frames destroys high-frequency content.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import scipy.signal
from numpy.lib.stride_tricks import sliding_window_view

from ..ctensor import ComplexTensor, Tensor, irfft, no_grad
from ..ctensor.functional import linear_resize_matrix
from .audio import AudioClip


class InputTooShortError(ValueError):
    """Clip has fewer samples than image columns, so the hop would be zero."""


class ReconstructionError(ValueError):
    """Overlap-add cannot be normalised (window gaps between frames)."""


@dataclass(frozen=True)
class StftConfig:
    n_fft: int = 1023
    win_length: int = 1000
    window: str = "hamming"
    center: bool = True
    image_size: int = 512

    def __post_init__(self):
        if self.n_fft % 2 == 0:
            raise ValueError("n_fft must be odd so the spectrum has no Nyquist bin")
        if not 0 < self.win_length <= self.n_fft:
            raise ValueError("win_length must be in (0, n_fft]")
        if not self.center:
            raise ValueError("only centred framing is supported")

    @property
    def n_bins(self) -> int:
        return self.n_fft // 2 + 1

    @classmethod
    def for_image_size(cls, size: int) -> "StftConfig":
        """Scale the default 1023/1000 framing to a ``size`` x ``size`` image."""
        n_fft = 2 * size - 1
        return cls(n_fft=n_fft, win_length=round(n_fft * 1000 / 1023), image_size=size)

    def to_dict(self) -> dict:
        return asdict(self)


def analysis_window(cfg: StftConfig, dtype=np.float64) -> np.ndarray:
    """``win_length``-point periodic window centred in an ``n_fft`` frame."""
    w = np.zeros(cfg.n_fft, dtype=dtype)
    lo = (cfg.n_fft - cfg.win_length) // 2
    w[lo : lo + cfg.win_length] = scipy.signal.get_window(cfg.window, cfg.win_length)
    return w


def hop_length_for(n_samples: int, image_size: int = 512) -> int:
    hop = n_samples // image_size
    if hop < 1:
        raise InputTooShortError(
            f"audio has {n_samples} samples; at least {image_size} are needed"
        )
    return hop


def n_frames_for(n_samples: int, hop: int) -> int:
    return 1 + (n_samples - 1) // hop


def _phase_ramp(n_bins: int, n_frames: int, hop: int, n_fft: int) -> np.ndarray:
    k = np.arange(n_bins)[:, None]
    t = np.arange(n_frames)[None, :] * hop
    return np.exp(-2j * np.pi * ((k * t) % n_fft) / n_fft)


def stft_matrix(samples: np.ndarray, cfg: StftConfig, hop: int) -> np.ndarray:
    """Complex STFT, shape [n_bins, n_frames], float64 precision."""
    x = np.asarray(samples, dtype=np.float64)
    pad = cfg.n_fft // 2
    if len(x) <= pad:
        raise InputTooShortError(f"reflect padding needs more than {pad} samples")
    xp = np.pad(x, pad, mode="reflect")
    n_frames = n_frames_for(len(x), hop)
    frames = sliding_window_view(xp, cfg.n_fft)[::hop][:n_frames]
    coeffs = np.fft.rfft(frames * analysis_window(cfg), axis=-1).T
    return coeffs * _phase_ramp(cfg.n_bins, n_frames, hop, cfg.n_fft)


@dataclass
class SpectroImage:
    """A [C, S, S] complex image plus what is needed to invert it."""

    image: ComplexTensor
    orig_freq_bins: int
    orig_frames: int
    hop_length: int
    audio_length: int
    window_length: int
    n_fft: int
    sample_rate: int = 16000

    def __post_init__(self):
        h, w = self.image.shape[-2:]
        if h != w:
            raise ValueError(f"spectro image must be square, got {h}x{w}")
        if self.hop_length < 1:
            raise ValueError("hop_length must be >= 1")

    @property
    def image_size(self) -> int:
        return self.image.shape[-1]

    def meta(self) -> dict:
        return {
            "orig_freq_bins": self.orig_freq_bins,
            "orig_frames": self.orig_frames,
            "hop_length": self.hop_length,
            "audio_length": self.audio_length,
            "window_length": self.window_length,
            "n_fft": self.n_fft,
            "sample_rate": self.sample_rate,
        }

    def with_image(self, image: ComplexTensor) -> "SpectroImage":
        return SpectroImage(image, **self.meta())


def stft_image(clip: AudioClip, cfg: StftConfig | None = None, dtype=np.float32) -> SpectroImage:
    """STFT of a clip, bilinearly resized per part to ``image_size`` squared."""
    cfg = cfg or StftConfig()
    n = len(clip.samples)
    hop = hop_length_for(n, cfg.image_size)
    coeffs = stft_matrix(clip.samples, cfg, hop)
    n_bins, n_frames = coeffs.shape
    rows = linear_resize_matrix(n_bins, cfg.image_size)
    cols = linear_resize_matrix(n_frames, cfg.image_size)
    img = rows @ coeffs @ cols.T
    return SpectroImage(
        image=ComplexTensor.from_numpy(img[None], dtype=dtype),
        orig_freq_bins=n_bins,
        orig_frames=n_frames,
        hop_length=hop,
        audio_length=n,
        window_length=cfg.win_length,
        n_fft=cfg.n_fft,
        sample_rate=clip.sample_rate,
    )


def overlap_add(frames: Tensor, hop: int) -> Tensor:
    """Sum frames [..., T, N] at stride ``hop`` into a signal [..., (T-1)*hop + N]."""
    *lead, n_frames, n = frames.shape
    length = (n_frames - 1) * hop + n
    out = np.zeros((*lead, length), dtype=frames.dtype)
    data = frames.data
    for t in range(n_frames):
        out[..., t * hop : t * hop + n] += data[..., t, :]

    def bw(g):
        win = sliding_window_view(g, n, axis=-1)[..., ::hop, :][..., :n_frames, :]
        frames._accumulate(win)

    return Tensor._make(out, (frames,), bw)


def istft_tensor(image: ComplexTensor, meta: dict, cfg: StftConfig | None = None) -> Tensor:
    """Differentiable inverse of :func:`stft_image`: [C, S, S] -> [C, audio_length]."""
    n_fft = meta["n_fft"]
    hop = meta["hop_length"]
    n_bins, n_frames, length = meta["orig_freq_bins"], meta["orig_frames"], meta["audio_length"]
    cfg = cfg or StftConfig(n_fft=n_fft, win_length=meta["window_length"], image_size=image.shape[-1])
    win = analysis_window(cfg)
    if hop > cfg.win_length:
        raise ReconstructionError(f"hop {hop} exceeds window length {cfg.win_length}")
    dt = image.dtype
    size = image.shape[-1]
    rows = Tensor(linear_resize_matrix(size, n_bins).astype(dt))
    cols_t = Tensor(linear_resize_matrix(size, n_frames).T.astype(dt))
    coeffs = ComplexTensor(rows @ image.real @ cols_t, rows @ image.imag @ cols_t)
    coeffs = coeffs * ComplexTensor.from_numpy(np.conj(_phase_ramp(n_bins, n_frames, hop, n_fft)), dt)
    coeffs = coeffs.swapaxes(-1, -2)
    frames = irfft(coeffs.real, coeffs.imag, n_fft) * Tensor(win.astype(dt))
    signal = overlap_add(frames, hop)

    pad = n_fft // 2
    inv = 1.0 / _window_sum_square(win, n_frames, hop, pad, length)
    return signal[..., pad : pad + length] * Tensor(inv.astype(dt))


def istft_audio(s: SpectroImage, channel: int = 0) -> AudioClip:
    with no_grad():
        audio = istft_tensor(s.image, s.meta())
    return AudioClip(np.asarray(audio.data[channel], dtype=np.float64), s.sample_rate)


def istft_matrix(coeffs: np.ndarray, cfg: StftConfig, hop: int, length: int) -> np.ndarray:
    """Resize-free inverse of :func:`stft_matrix` (float64, no autodiff)."""
    n_bins, n_frames = coeffs.shape
    frames = np.fft.irfft((coeffs * np.conj(_phase_ramp(n_bins, n_frames, hop, cfg.n_fft))).T,
                          n=cfg.n_fft, axis=-1)
    win = analysis_window(cfg)
    sig = overlap_add(Tensor(frames * win), hop).data
    pad = cfg.n_fft // 2
    return sig[pad : pad + length] / _window_sum_square(win, n_frames, hop, pad, length)


def _window_sum_square(win, n_frames, hop, pad, length) -> np.ndarray:
    """Squared-window overlap sum over the un-padded clip span."""
    wss = np.zeros((n_frames - 1) * hop + len(win))
    sq = win * win
    for t in range(n_frames):
        wss[t * hop : t * hop + len(win)] += sq
    wss = wss[pad : pad + length]
    if len(wss) < length or np.any(wss < 1e-10):
        raise ReconstructionError(
            f"window overlap sum vanishes inside the clip (hop={hop}, frames={n_frames})"
        )
    return wss
