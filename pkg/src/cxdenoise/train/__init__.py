from .ablate import CELLS, AblationResult, ablate
from .checkpoint import CheckpointError, load_checkpoint, read_checkpoint, save_checkpoint
from .config import ConfigError, TrainConfig, config_hash
from .data import DataValidationError, Pair, load_pair_dirs, match_wav_dirs, synthetic_pairs, validate_pairs
from .loop import Trainer, evaluate_pair, identity_denoiser, mean_kind_ssim, summarize
from .optim import Adam, NonFiniteGradientError, clip_by_global_norm, global_norm

__all__ = [
    "CELLS",
    "AblationResult",
    "ablate",
    "Adam",
    "CheckpointError",
    "ConfigError",
    "DataValidationError",
    "NonFiniteGradientError",
    "Pair",
    "TrainConfig",
    "Trainer",
    "clip_by_global_norm",
    "config_hash",
    "evaluate_pair",
    "global_norm",
    "identity_denoiser",
    "load_checkpoint",
    "load_pair_dirs",
    "match_wav_dirs",
    "mean_kind_ssim",
    "read_checkpoint",
    "save_checkpoint",
    "summarize",
    "synthetic_pairs",
    "validate_pairs",
]
