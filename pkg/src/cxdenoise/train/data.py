"""Paired noisy/clean clips: validation, directory loading and a synthetic toy set."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..signal import AudioClip, read_wav


class DataValidationError(ValueError):
    """Raised before training when the paired data is inconsistent."""

    def __init__(self, message: str, problems: list[str] | None = None):
        self.problems = list(problems or [])
        detail = "".join(f"\n  {p}" for p in self.problems)
        super().__init__(message + detail)


@dataclass
class Pair:
    name: str
    noisy: AudioClip
    clean: AudioClip


def validate_pairs(pairs: list[Pair]) -> None:
    if not pairs:
        raise DataValidationError("no training pairs given")
    problems = []
    for p in pairs:
        if len(p.noisy.samples) != len(p.clean.samples):
            problems.append(f"{p.name}: noisy has {len(p.noisy.samples)} samples, clean has {len(p.clean.samples)}")
        if p.noisy.sample_rate != p.clean.sample_rate:
            problems.append(f"{p.name}: sample rates {p.noisy.sample_rate} vs {p.clean.sample_rate}")
        if not np.any(p.clean.samples):
            problems.append(f"{p.name}: clean clip is silent, SDR is undefined")
    if problems:
        raise DataValidationError("paired data failed validation:", problems)


def match_wav_dirs(noisy_dir: str | Path, clean_dir: str | Path) -> list[str]:
    """Basenames present in both directories; any unmatched file is an error."""
    noisy_dir, clean_dir = Path(noisy_dir), Path(clean_dir)
    for d in (noisy_dir, clean_dir):
        if not d.is_dir():
            raise DataValidationError(f"not a directory: {d}")
    noisy = {p.name for p in noisy_dir.glob("*.wav")}
    clean = {p.name for p in clean_dir.glob("*.wav")}
    problems = [f"{noisy_dir / n}: no clean counterpart" for n in sorted(noisy - clean)]
    problems += [f"{clean_dir / n}: no noisy counterpart" for n in sorted(clean - noisy)]
    if problems:
        raise DataValidationError("unmatched files:", problems)
    if not noisy:
        raise DataValidationError(f"no .wav files in {noisy_dir}")
    return sorted(noisy)


def load_pair_dirs(noisy_dir: str | Path, clean_dir: str | Path) -> list[Pair]:
    names = match_wav_dirs(noisy_dir, clean_dir)
    pairs = [Pair(n, read_wav(Path(noisy_dir) / n), read_wav(Path(clean_dir) / n)) for n in names]
    validate_pairs(pairs)
    return pairs


def synthetic_pairs(n: int = 4, length: int = 2048, sample_rate: int = 8000, n_fft: int = 127,
                    amplitude: float = 0.05, noise_std: float = 0.005, n_tones: int = 2,
                    seed: int = 0) -> list[Pair]:
    """Sums of bin-centred sines with additive white noise.

    Tone frequencies sit on STFT bin centres of an ``n_fft``-point transform
    so the clean spectrogram is sparse.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(length) / sample_rate
    n_bins = n_fft // 2 + 1
    pairs = []
    for i in range(n):
        bins = rng.choice(np.arange(3, n_bins - 3), size=n_tones, replace=False)
        clean = np.zeros(length)
        for b in bins:
            freq = b * sample_rate / n_fft
            amp = amplitude * rng.uniform(0.5, 1.0)
            clean += amp * np.sin(2 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))
        noisy = clean + noise_std * rng.standard_normal(length)
        pairs.append(Pair(f"toy_{i:03d}.wav", AudioClip(noisy, sample_rate), AudioClip(clean, sample_rate)))
    return pairs
