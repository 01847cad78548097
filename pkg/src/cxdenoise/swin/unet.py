"""Four-level lifted-convolution U-Net with the same I/O contract as the Swin core."""
from __future__ import annotations


import numpy as np

from ..ctensor import ComplexTensor, ShapeError, cconcat
from ..ctensor.layers import CConv2d, CGELU, CMaxPool2d, CUpsample, Module


class ConvBlock(Module):
    def __init__(self, c_in, c_out, *, rng, dtype, centered):
        self.conv1 = CConv2d(c_in, c_out, 3, padding=1, rng=rng, dtype=dtype, centered=centered)
        self.conv2 = CConv2d(c_out, c_out, 3, padding=1, rng=rng, dtype=dtype, centered=centered)
        self.act = CGELU()

    def forward(self, z):
        return self.act(self.conv2(self.act(self.conv1(z))))


class ComplexUNet(Module):
    """Encoder widths C, 2C, 4C, 8C with max-pooling; nearest upsampling + skips."""

    def __init__(self, cfg):
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        kw = dict(rng=rng, dtype=np.dtype(cfg.dtype), centered=cfg.centered_lift)
        c = cfg.embed_dim
        widths = [c, 2 * c, 4 * c, 8 * c]
        self.down = [ConvBlock(cfg.in_channels, widths[0], **kw)]
        for a, b in zip(widths[:-1], widths[1:]):
            self.down.append(ConvBlock(a, b, **kw))
        self.pool = CMaxPool2d(2)
        self.upsample = CUpsample(2)
        self.up_proj = []
        self.up = []
        for a, b in zip(widths[:0:-1], widths[-2::-1]):
            self.up_proj.append(CConv2d(a, b, 1, rng=rng, dtype=kw["dtype"], centered=cfg.centered_lift))
            self.up.append(ConvBlock(2 * b, b, **kw))
        self.head = CConv2d(widths[0], cfg.in_channels, 1, **kw)

    def forward(self, x: ComplexTensor) -> ComplexTensor:
        cfg = self.cfg
        n, c, h, w = x.shape
        if (c, h, w) != (cfg.in_channels, cfg.image_size, cfg.image_size):
            raise ShapeError(
                f"expected input [N, {cfg.in_channels}, {cfg.image_size}, {cfg.image_size}], got {x.shape}"
            )
        skips = []
        z = x
        for i, block in enumerate(self.down):
            z = block(z)
            if i < len(self.down) - 1:
                skips.append(z)
                z = self.pool(z)
        for proj, block in zip(self.up_proj, self.up):
            z = proj(self.upsample(z))
            z = block(cconcat([z, skips.pop()], axis=1))
        out = self.head(z)
        if cfg.global_residual:
            out = out + x
        return out
