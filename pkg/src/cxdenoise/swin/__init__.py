from .attention import (
    SwinBlock,
    SwinStage,
    WindowAttention,
    cwindow_attention,
    relative_position_index,
    shift_attention_mask,
)
from .model import ComplexSwinUNet, PatchEmbed, PatchExpand, PatchMerge, SwinConfig
from .unet import ComplexUNet


def build_model(cfg: SwinConfig, core: str = "swin"):
    if core == "swin":
        return ComplexSwinUNet(cfg)
    if core == "unet":
        return ComplexUNet(cfg)
    raise ValueError(f"unknown core {core!r}; expected 'swin' or 'unet'")


__all__ = [
    "ComplexSwinUNet",
    "ComplexUNet",
    "PatchEmbed",
    "PatchExpand",
    "PatchMerge",
    "SwinBlock",
    "SwinConfig",
    "SwinStage",
    "WindowAttention",
    "build_model",
    "cwindow_attention",
    "relative_position_index",
    "shift_attention_mask",
]
