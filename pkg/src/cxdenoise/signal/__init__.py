from .audio import AudioClip, WavError, encode_wav, parse_wav, read_wav, write_wav
from .stft import (
    InputTooShortError,
    ReconstructionError,
    SpectroImage,
    StftConfig,
    analysis_window,
    hop_length_for,
    istft_audio,
    istft_matrix,
    istft_tensor,
    n_frames_for,
    stft_image,
    stft_matrix,
)

__all__ = [
    "AudioClip",
    "InputTooShortError",
    "ReconstructionError",
    "SpectroImage",
    "StftConfig",
    "WavError",
    "analysis_window",
    "encode_wav",
    "hop_length_for",
    "istft_audio",
    "istft_matrix",
    "istft_tensor",
    "n_frames_for",
    "parse_wav",
    "read_wav",
    "stft_image",
    "stft_matrix",
    "write_wav",
]
