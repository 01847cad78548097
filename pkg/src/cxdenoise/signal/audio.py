"""Mono audio clips and a small RIFF/WAVE codec.

Reads 16-bit PCM and 32-bit IEEE float (plain or WAVE_FORMAT_EXTENSIBLE);
multi-channel files keep channel 0.  Writes 16-bit PCM only.
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE


class WavError(ValueError):
    """Malformed or unsupported WAV data; ``offset`` is the byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


@dataclass
class AudioClip:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError(f"AudioClip holds mono samples, got shape {self.samples.shape}")
        if self.samples.size == 0:
            raise ValueError("AudioClip is empty")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("AudioClip contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")
        self.sample_rate = int(self.sample_rate)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def read_wav(path: str | os.PathLike) -> AudioClip:
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_wav(data)


def parse_wav(data: bytes) -> AudioClip:
    if len(data) < 12:
        raise WavError("file too short for a RIFF header", len(data))
    if data[0:4] != b"RIFF":
        raise WavError(f"expected 'RIFF', found {data[0:4]!r}", 0)
    if data[8:12] != b"WAVE":
        raise WavError(f"expected 'WAVE', found {data[8:12]!r}", 8)

    fmt = None
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = pos + 8
        if cid == b"fmt ":
            if size < 16 or body + size > len(data):
                raise WavError("truncated fmt chunk", pos)
            fmt = _parse_fmt(data, body, size)
        elif cid == b"data":
            if fmt is None:
                raise WavError("data chunk before fmt chunk", pos)
            if body + size > len(data):
                raise WavError(
                    f"data chunk declares {size} bytes but only {len(data) - body} remain", pos
                )
            return _decode(data[body : body + size], fmt, body)
        pos = body + size + (size & 1)
    raise WavError("no data chunk found", pos)


def _parse_fmt(data: bytes, off: int, size: int) -> dict:
    tag, channels, rate, _, block_align, bits = struct.unpack_from("<HHIIHH", data, off)
    if tag == WAVE_FORMAT_EXTENSIBLE:
        if size < 40:
            raise WavError("extensible fmt chunk too short", off)
        (tag,) = struct.unpack_from("<H", data, off + 24)
    if channels < 1:
        raise WavError("zero channels", off + 2)
    if rate == 0:
        raise WavError("zero sample rate", off + 4)
    if (tag, bits) not in {(WAVE_FORMAT_PCM, 16), (WAVE_FORMAT_IEEE_FLOAT, 32)}:
        raise WavError(f"unsupported codec: format tag {tag:#06x} with {bits} bits", off)
    return {"tag": tag, "channels": channels, "rate": rate, "bits": bits, "block_align": block_align}


def _decode(raw: bytes, fmt: dict, offset: int) -> AudioClip:
    width = fmt["bits"] // 8
    frame = width * fmt["channels"]
    n = len(raw) // frame
    if n == 0:
        raise WavError("data chunk holds no complete frame", offset)
    if fmt["tag"] == WAVE_FORMAT_PCM:
        arr = np.frombuffer(raw[: n * frame], dtype="<i2").astype(np.float64) / 32768.0
    else:
        arr = np.frombuffer(raw[: n * frame], dtype="<f4").astype(np.float64)
    arr = arr.reshape(n, fmt["channels"])[:, 0]
    if not np.all(np.isfinite(arr)):
        raise WavError("non-finite float samples", offset)
    return AudioClip(arr, fmt["rate"])


def encode_wav(clip: AudioClip) -> bytes:
    pcm = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2").tobytes()
    fmt = struct.pack("<HHIIHH", WAVE_FORMAT_PCM, 1, clip.sample_rate, clip.sample_rate * 2, 2, 16)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(pcm)) + pcm
    if len(pcm) & 1:
        body += b"\x00"
    return b"RIFF" + struct.pack("<I", len(body)) + body


def write_wav(clip: AudioClip, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_wav(clip))
