"""The six-cell {U, C} x {I, A, I+A} ablation over one dataset."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..signal import StftConfig
from ..swin import SwinConfig
from .config import TrainConfig
from .data import Pair
from .loop import Trainer, summarize

CELLS = (
    ("U+I", "unet", True, False),
    ("U+A", "unet", False, True),
    ("U+I+A", "unet", True, True),
    ("C+I", "swin", True, False),
    ("C+A", "swin", False, True),
    ("C+I+A", "swin", True, True),
)


@dataclass
class AblationResult:
    sdr: dict[str, float]
    noisy_sdr: float
    notes: list[str]

    def header(self) -> str:
        return " & ".join(self.sdr) + r" \\"

    def row(self) -> str:
        return " & ".join(f"{v:.2f}" for v in self.sdr.values()) + r" \\"

    def render(self) -> str:
        lines = [self.header(), self.row(), f"noisy input SDR: {self.noisy_sdr:.2f} dB"]
        return "\n".join(lines + self.notes)

    def all_above_baseline(self) -> bool:
        return all(math.isfinite(v) and v > self.noisy_sdr for v in self.sdr.values())


def ablate(cfg: TrainConfig, model_cfg: SwinConfig, stft_cfg: StftConfig, pairs: list[Pair],
           log=None) -> AblationResult:
    """Train each cell from the same seed and report mean denoised SDR (dB)."""
    sdrs = {}
    noisy = None
    for name, core, use_im, use_audio in CELLS:
        cell_cfg = replace(cfg, core=core, enable_image_loss=use_im, enable_audio_loss=use_audio)
        trainer = Trainer(cell_cfg, model_cfg, stft_cfg, pairs)
        reports = trainer.run()
        agg = summarize(trainer.evaluate(pairs))
        sdrs[name] = agg["sdr"]
        noisy = agg["sdr_noisy"]
        if log is not None:
            log(f"{name}: steps={trainer.step_count} final_total={reports[-1].total:.4f} sdr={agg['sdr']:.2f}")

    notes = []
    for single in ("C+I", "C+A"):
        ok = sdrs["C+I+A"] >= sdrs[single]
        notes.append(f"expectation C+I+A >= {single}: {'holds' if ok else 'does not hold'}")
    order = sorted(sdrs, key=sdrs.get, reverse=True)
    notes.append("ordering: " + " > ".join(order))
    return AblationResult(sdrs, float(np.asarray(noisy)), notes)
