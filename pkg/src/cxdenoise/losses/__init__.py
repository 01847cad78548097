from .audio import (
    SDR_CLAMP_DB,
    SDR_UPPER,
    UndefinedReferenceError,
    l1_audio,
    reconstruction_loss,
    sdr,
    sdr_loss,
    sdr_tensor,
)
from .image import (
    KINDS,
    FeatureExtractor,
    RandomConvFeatures,
    detail_loss,
    image_loss,
    image_views,
    l1_image,
    ssim,
    ssim_loss,
    ssim_map,
)
from .report import FIELD_ORDER, LossReport, total_objective

__all__ = [
    "FIELD_ORDER",
    "KINDS",
    "SDR_CLAMP_DB",
    "SDR_UPPER",
    "FeatureExtractor",
    "LossReport",
    "RandomConvFeatures",
    "UndefinedReferenceError",
    "detail_loss",
    "image_loss",
    "image_views",
    "l1_audio",
    "l1_image",
    "reconstruction_loss",
    "sdr",
    "sdr_loss",
    "sdr_tensor",
    "ssim",
    "ssim_loss",
    "ssim_map",
    "total_objective",
]
