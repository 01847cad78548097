"""Complex-valued spectrogram denoising: tensors, signal path, models, losses, training."""

__version__ = "0.1.0"
