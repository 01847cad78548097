"""The training loop: precompute spectro images, batch, forward, loss, Adam."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..ctensor import ComplexTensor, Tensor, cconcat, no_grad
from ..ctensor.layers import CDropout
from ..losses import (
    KINDS,
    LossReport,
    RandomConvFeatures,
    image_loss,
    image_views,
    reconstruction_loss,
    sdr,
    ssim,
    total_objective,
)
from ..signal import AudioClip, SpectroImage, StftConfig, istft_tensor, stft_image
from ..swin import SwinConfig, build_model
from .config import TrainConfig, config_hash
from .data import Pair, validate_pairs
from .optim import Adam, clip_by_global_norm, grads_of


@dataclass
class Example:
    name: str
    noisy: SpectroImage
    clean: SpectroImage
    clean_audio: Tensor
    noisy_clip: AudioClip
    clean_clip: AudioClip


def _stack(images: list[ComplexTensor]) -> ComplexTensor:
    return cconcat([im.reshape(1, *im.shape) for im in images], axis=0)


class Trainer:
    """Owns the model, optimizer and precomputed data for one run.

    The minibatch order is a pure function of (seed, step), so resuming from
    a checkpoint replays exactly the batches an uninterrupted run would see.
    """

    def __init__(self, cfg: TrainConfig, model_cfg: SwinConfig, stft_cfg: StftConfig,
                 pairs: list[Pair] | None = None):
        if stft_cfg.image_size != model_cfg.image_size:
            raise ValueError(f"STFT image size {stft_cfg.image_size} != model image size {model_cfg.image_size}")
        self.cfg = cfg
        self.model_cfg = model_cfg
        self.stft_cfg = stft_cfg
        self.dtype = np.dtype(model_cfg.dtype)
        self.model = build_model(model_cfg, cfg.core)
        self.fe = RandomConvFeatures(in_channels=model_cfg.in_channels, seed=cfg.feature_seed, dtype=self.dtype)
        self.named = list(self.model.named_parameters())
        self.opt = Adam(self.named, lr=cfg.learning_rate)
        self.step_count = 0
        self.examples: list[Example] = []
        if pairs is not None:
            self.set_data(pairs)

    @property
    def config_hash(self) -> str:
        return config_hash(self.cfg, self.model_cfg.to_dict(), self.stft_cfg.to_dict())

    def set_data(self, pairs: list[Pair]) -> None:
        validate_pairs(pairs)
        self.examples = [self.prepare(p) for p in pairs]

    def prepare(self, pair: Pair) -> Example:
        noisy = stft_image(pair.noisy, self.stft_cfg, self.dtype)
        clean = stft_image(pair.clean, self.stft_cfg, self.dtype)
        audio = Tensor(pair.clean.samples.astype(self.dtype)[None])
        return Example(pair.name, noisy, clean, audio, pair.noisy, pair.clean)

    # -- batching -------------------------------------------------------
    @property
    def steps_per_epoch(self) -> int:
        return math.ceil(len(self.examples) / self.cfg.batch_size)

    @property
    def total_steps(self) -> int:
        if self.cfg.max_steps is not None:
            return self.cfg.max_steps
        return self.cfg.epochs * self.steps_per_epoch

    def batch_indices(self, step: int) -> np.ndarray:
        epoch, k = divmod(step, self.steps_per_epoch)
        order = np.random.default_rng([self.cfg.seed, epoch]).permutation(len(self.examples))
        b = self.cfg.batch_size
        return order[k * b : (k + 1) * b]

    # -- loss -----------------------------------------------------------
    def forward(self, batch: list[Example]) -> ComplexTensor:
        return self.model(_stack([ex.noisy.image for ex in batch]))

    def loss(self, batch: list[Example]) -> tuple[Tensor, LossReport]:
        """Batch objective: the mean of the per-example objectives."""
        cfg = self.cfg
        out = self.forward(batch)
        terms = {f"l_{t}_{k}": 0.0 for k in KINDS for t in "fsd"}
        im_total = rec_total = 0.0
        if cfg.enable_image_loss:
            truth = _stack([ex.clean.image for ex in batch])
            im_total, im_terms = image_loss(out, truth, self.fe)
            terms.update(im_terms)
        l_a = l_sdr = 0.0
        if cfg.enable_audio_loss:
            n = len(batch)
            for i, ex in enumerate(batch):
                audio = istft_tensor(out[i], ex.noisy.meta(), self.stft_cfg)
                r, a, s, _ = reconstruction_loss(audio, ex.clean_audio)
                rec_total = r * (1.0 / n) + rec_total
                l_a = a * (1.0 / n) + l_a
                l_sdr = s * (1.0 / n) + l_sdr
        total = total_objective(im_total, rec_total, cfg.alpha)
        if not isinstance(total, Tensor):
            total = Tensor(np.asarray(total, dtype=self.dtype))
        terms.update(l_im_total=im_total, l_a=l_a, l_sdr=l_sdr, l_r=rec_total, total=total)
        report = LossReport.from_terms(terms, cfg.alpha)
        return total, report

    # -- optimisation ---------------------------------------------------
    def step(self) -> LossReport:
        if not self.examples:
            raise RuntimeError("no data; call set_data first")
        self.model.train()
        batch = [self.examples[i] for i in self.batch_indices(self.step_count)]
        self.opt.zero_grad()
        total, report = self.loss(batch)
        if not math.isfinite(report.total):
            raise FloatingPointError(f"loss is not finite at step {self.step_count + 1}: {report.as_dict()}")
        report.check(tol=1e-4)
        total.backward()
        grads, _ = clip_by_global_norm(grads_of(self.named), self.cfg.grad_clip)
        self.opt.step(grads)
        self.step_count += 1
        return report

    def run(self, n_steps: int | None = None,
            on_step: Callable[[int, LossReport, float], None] | None = None) -> list[LossReport]:
        """Train until ``n_steps`` more steps (default: up to ``total_steps``)."""
        target = self.total_steps if n_steps is None else self.step_count + n_steps
        reports = []
        while self.step_count < target:
            t0 = time.perf_counter()
            rep = self.step()
            reports.append(rep)
            if on_step is not None:
                on_step(self.step_count, rep, time.perf_counter() - t0)
        return reports

    # -- inference ------------------------------------------------------
    def generate(self, image: SpectroImage) -> SpectroImage:
        self.model.eval()
        with no_grad():
            out = self.model(image.image.reshape(1, *image.image.shape))
        return image.with_image(out[0].detach())

    def denoise(self, clip: AudioClip) -> tuple[AudioClip, SpectroImage, SpectroImage]:
        noisy = stft_image(clip, self.stft_cfg, self.dtype)
        gen = self.generate(noisy)
        with no_grad():
            audio = istft_tensor(gen.image, gen.meta(), self.stft_cfg)
        return AudioClip(audio.data[0].astype(np.float64), clip.sample_rate), noisy, gen

    def evaluate(self, pairs: list[Pair]) -> list[dict]:
        return [evaluate_pair(p, self.denoise, self.stft_cfg, self.dtype) for p in pairs]

    # -- state ----------------------------------------------------------
    def dropout_rngs(self) -> list[np.random.Generator]:
        seen: dict[int, np.random.Generator] = {}
        for m in self.model.modules():
            if isinstance(m, CDropout) and m.rng is not None:
                seen.setdefault(id(m.rng), m.rng)
        return list(seen.values())


def mean_kind_ssim(a: ComplexTensor, b: ComplexTensor) -> float:
    """Mean over real/imag/abs views of the SSIM metric."""
    with no_grad():
        va, vb = image_views(a), image_views(b)
        return float(np.mean([float(ssim(va[k], vb[k]).data) for k in KINDS]))


def evaluate_pair(pair: Pair, denoise_fn, stft_cfg: StftConfig, dtype=np.float32) -> dict:
    """SDR and mean-of-kinds SSIM for one pair under ``denoise_fn``.

    ``denoise_fn(clip) -> (audio, noisy_image, generated_image)``.
    """
    audio, _, gen = denoise_fn(pair.noisy)
    clean_img = stft_image(pair.clean, stft_cfg, dtype)
    return {
        "name": pair.name,
        "sdr": sdr(audio.samples, pair.clean.samples),
        "sdr_noisy": sdr(pair.noisy.samples, pair.clean.samples),
        "ssim": mean_kind_ssim(gen.image, clean_img.image),
    }


def identity_denoiser(stft_cfg: StftConfig, dtype=np.float32):
    """Baseline that returns the noisy input untouched."""

    def fn(clip: AudioClip):
        img = stft_image(clip, stft_cfg, dtype)
        return clip, img, img

    return fn


def summarize(rows: list[dict]) -> dict:
    """Aggregate row = per-column mean (``inf`` propagates)."""
    keys = [k for k in rows[0] if k != "name"]
    return {"name": "mean", **{k: float(np.mean([r[k] for r in rows])) for k in keys}}
