"""Training hyper-parameters."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

CORES = ("swin", "unet")


class ConfigError(ValueError):
    """A configuration field holds an invalid value."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class TrainConfig:
    batch_size: int = 16
    epochs: int = 100
    max_steps: int | None = None
    learning_rate: float = 1e-3
    alpha: float = 0.5
    core: str = "swin"
    enable_image_loss: bool = True
    enable_audio_loss: bool = True
    seed: int = 0
    feature_seed: int = 0
    checkpoint_every: int = 0
    grad_clip: float = 5.0
    noisy_dir: str = ""
    clean_dir: str = ""

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not (self.enable_image_loss or self.enable_audio_loss):
            raise ConfigError("enable_image_loss", "at least one of the image and audio losses must be on")
        if self.batch_size < 1:
            raise ConfigError("batch_size", f"must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate", f"must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha", f"must lie in [0, 1], got {self.alpha}")
        if self.core not in CORES:
            raise ConfigError("core", f"must be one of {CORES}, got {self.core!r}")
        if self.epochs < 1:
            raise ConfigError("epochs", f"must be >= 1, got {self.epochs}")
        if self.max_steps is not None and self.max_steps < 1:
            raise ConfigError("max_steps", f"must be >= 1, got {self.max_steps}")
        if self.checkpoint_every < 0:
            raise ConfigError("checkpoint_every", "must be >= 0")
        if self.grad_clip < 0:
            raise ConfigError("grad_clip", "must be >= 0 (0 disables clipping)")

    def to_dict(self) -> dict:
        return asdict(self)

    # Fields that change the optimisation trajectory; run length and paths do not.
    TRAJECTORY_FIELDS = ("batch_size", "learning_rate", "alpha", "core", "enable_image_loss",
                         "enable_audio_loss", "seed", "feature_seed", "grad_clip")


def config_hash(train: TrainConfig, model: dict, stft: dict) -> str:
    payload = {
        "train": {k: getattr(train, k) for k in TrainConfig.TRAJECTORY_FIELDS},
        "model": model,
        "stft": stft,
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
