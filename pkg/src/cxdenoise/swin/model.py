"""Complex Swin encoder-decoder mapping noisy spectro images to clean ones."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..ctensor import ComplexTensor, ShapeError, cconcat
from ..ctensor.layers import CLayerNorm, CLinear, Module
from .attention import SwinStage


@dataclass
class SwinConfig:
    in_channels: int = 1
    image_size: int = 512
    patch_size: int = 4
    embed_dim: int = 96
    depths: tuple = (2, 2, 2, 2)
    heads: tuple = (3, 6, 12, 24)
    window_size: int = 8
    mlp_ratio: float = 4.0
    drop_rate: float = 0.0
    attn_drop_rate: float = 0.0
    dropout_shared_mask: bool = False
    centered_lift: bool = True
    global_residual: bool = True
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        self.depths = tuple(int(d) for d in self.depths)
        self.heads = tuple(int(h) for h in self.heads)
        if len(self.depths) != 4 or len(self.heads) != 4:
            raise ValueError("depths and heads need one entry per stage (4)")
        if self.image_size % (self.patch_size * 8):
            raise ValueError(f"image_size {self.image_size} must be a multiple of {self.patch_size * 8}")
        for i, h in enumerate(self.heads):
            if (self.embed_dim * 2**i) % h:
                raise ValueError(f"stage {i}: {self.embed_dim * 2 ** i} channels not divisible by {h} heads")

    def stage_dims(self) -> list[tuple[int, int]]:
        """(spatial extent, channels) of the four encoder stages."""
        base = self.image_size // self.patch_size
        return [(base // 2**i, self.embed_dim * 2**i) for i in range(4)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["depths"] = list(self.depths)
        d["heads"] = list(self.heads)
        return d


class PatchEmbed(Module):
    """Non-overlapping p x p patches -> CLinear -> CLayerNorm."""

    def __init__(self, in_ch, dim, patch, *, rng, dtype, centered):
        self.patch = patch
        self.proj = CLinear(in_ch * patch * patch, dim, rng=rng, dtype=dtype, centered=centered)
        self.norm = CLayerNorm(dim, dtype=dtype, centered=centered)

    def forward(self, x: ComplexTensor) -> ComplexTensor:
        n, c, h, w = x.shape
        p = self.patch
        t = x.reshape(n, c, h // p, p, w // p, p).transpose(0, 2, 4, 1, 3, 5)
        t = t.reshape(n, (h // p) * (w // p), c * p * p)
        return self.norm(self.proj(t))


class PatchMerge(Module):
    """Concatenate each 2x2 neighbourhood (4C) and project to 2C."""

    def __init__(self, resolution, dim, *, rng, dtype, centered):
        self.resolution = tuple(resolution)
        self.reduction = CLinear(4 * dim, 2 * dim, bias=False, rng=rng, dtype=dtype, centered=centered)

    def forward(self, z: ComplexTensor) -> ComplexTensor:
        h, w = self.resolution
        n, length, c = z.shape
        if length != h * w:
            raise ShapeError(f"token count {length} does not match {h}x{w}")
        if h % 2 or w % 2:
            raise ShapeError(f"patch merge needs even dims, got {h}x{w}")
        x = z.reshape(n, h, w, c)
        parts = [x[:, 0::2, 0::2], x[:, 1::2, 0::2], x[:, 0::2, 1::2], x[:, 1::2, 1::2]]
        x = cconcat(parts, axis=-1).reshape(n, (h // 2) * (w // 2), 4 * c)
        return self.reduction(x)


class PatchExpand(Module):
    """CLinear to ``scale**2 * C_out`` then a pixel-shuffle to ``scale`` x the extent."""

    def __init__(self, resolution, dim, scale=2, out_dim=None, *, rng, dtype, centered):
        self.resolution = tuple(resolution)
        self.scale = scale
        self.out_dim = dim // 2 if out_dim is None else out_dim
        self.expand = CLinear(dim, scale * scale * self.out_dim, bias=False, rng=rng, dtype=dtype,
                              centered=centered)

    def forward(self, z: ComplexTensor) -> ComplexTensor:
        h, w = self.resolution
        n = z.shape[0]
        s, c = self.scale, self.out_dim
        x = self.expand(z).reshape(n, h, w, s, s, c).transpose(0, 1, 3, 2, 4, 5)
        return x.reshape(n, h * s * w * s, c)


@dataclass
class StageTrace:
    name: str
    shape: tuple = field(default_factory=tuple)


class ComplexSwinUNet(Module):
    """Four encoder stages (/4../32), four mirrored decoder stages, three skips."""

    def __init__(self, cfg: SwinConfig | None = None):
        self.cfg = cfg = cfg or SwinConfig()
        rng = np.random.default_rng(cfg.seed)
        dt = np.dtype(cfg.dtype)
        kw = dict(rng=rng, dtype=dt, centered=cfg.centered_lift)
        stage_kw = dict(mlp_ratio=cfg.mlp_ratio, drop=cfg.drop_rate, attn_drop=cfg.attn_drop_rate,
                        shared_mask=cfg.dropout_shared_mask, **kw)
        dims = cfg.stage_dims()
        m = cfg.window_size

        self.patch_embed = PatchEmbed(cfg.in_channels, cfg.embed_dim, cfg.patch_size, **kw)
        self.encoder = []
        self.merges = []
        for i, (res, dim) in enumerate(dims):
            self.encoder.append(SwinStage(dim, (res, res), cfg.depths[i], cfg.heads[i], m, **stage_kw))
            if i < 3:
                self.merges.append(PatchMerge((res, res), dim, **kw))

        self.decoder = []
        self.expands = []
        self.fuse = []
        for j, i in enumerate(reversed(range(4))):
            res, dim = dims[i]
            if j > 0:
                prev_res, prev_dim = dims[i + 1]
                self.expands.append(PatchExpand((prev_res, prev_res), prev_dim, **kw))
                self.fuse.append(CLinear(2 * dim, dim, **kw))
            self.decoder.append(SwinStage(dim, (res, res), cfg.depths[i], cfg.heads[i], m, **stage_kw))

        res0, dim0 = dims[0]
        self.norm_up = CLayerNorm(dim0, dtype=dt, centered=cfg.centered_lift)
        self.final_expand = PatchExpand((res0, res0), dim0, scale=cfg.patch_size, out_dim=dim0, **kw)
        self.head = CLinear(dim0, cfg.in_channels, **kw)
        self.trace: list[StageTrace] = []

    def forward(self, x: ComplexTensor) -> ComplexTensor:
        cfg = self.cfg
        n, c, h, w = x.shape
        if (c, h, w) != (cfg.in_channels, cfg.image_size, cfg.image_size):
            raise ShapeError(
                f"expected input [N, {cfg.in_channels}, {cfg.image_size}, {cfg.image_size}], got {x.shape}"
            )
        trace = []

        z = self.patch_embed(x)
        skips = []
        for i, stage in enumerate(self.encoder):
            z = stage(z)
            trace.append(self._trace(f"encoder/{4 * 2 ** i}", stage, z))
            if i < 3:
                skips.append(z)
                z = self.merges[i](z)

        for j, stage in enumerate(self.decoder):
            i = 3 - j
            if j > 0:
                z = self.expands[j - 1](z)
                z = self.fuse[j - 1](cconcat([z, skips[i]], axis=-1))
            z = stage(z)
            trace.append(self._trace(f"decoder/{4 * 2 ** i}", stage, z))
        self.trace = trace

        z = self.final_expand(self.norm_up(z))
        out = self.head(z).reshape(n, h, w, c).transpose(0, 3, 1, 2)
        if cfg.global_residual:
            out = out + x
        return out

    @staticmethod
    def _trace(name: str, stage: SwinStage, z: ComplexTensor) -> StageTrace:
        h, w = stage.resolution
        if z.shape[1] != h * w:
            raise ShapeError(f"{name}: {z.shape[1]} tokens for a {h}x{w} map")
        return StageTrace(name, (h, w, z.shape[-1]))

    def stage_shapes(self) -> list[tuple]:
        return [t.shape for t in self.trace]
