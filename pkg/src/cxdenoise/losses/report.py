"""Per-step loss breakdown and the weighted total objective."""
from __future__ import annotations

import json
from dataclasses import dataclass, fields

from ..ctensor import Tensor

FIELD_ORDER = (
    "l_f_real", "l_s_real", "l_d_real",
    "l_f_imag", "l_s_imag", "l_d_imag",
    "l_f_abs", "l_s_abs", "l_d_abs",
    "l_im_total", "l_a", "l_sdr", "l_r", "total",
)


def total_objective(image_part, recon_part, alpha: float = 0.5):
    """``alpha * image + (1 - alpha) * recon``; either part may be a float or Tensor."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return image_part * alpha + recon_part * (1.0 - alpha)


@dataclass
class LossReport:
    l_f_real: float = 0.0
    l_s_real: float = 0.0
    l_d_real: float = 0.0
    l_f_imag: float = 0.0
    l_s_imag: float = 0.0
    l_d_imag: float = 0.0
    l_f_abs: float = 0.0
    l_s_abs: float = 0.0
    l_d_abs: float = 0.0
    l_im_total: float = 0.0
    l_a: float = 0.0
    l_sdr: float = 0.0
    l_r: float = 0.0
    total: float = 0.0
    alpha: float = 0.5

    @classmethod
    def from_terms(cls, terms: dict, alpha: float) -> "LossReport":
        vals = {k: float(v.data) if isinstance(v, Tensor) else float(v) for k, v in terms.items()}
        return cls(alpha=alpha, **vals)

    def image_kind_total(self, kind: str) -> float:
        return getattr(self, f"l_f_{kind}") + getattr(self, f"l_s_{kind}") + getattr(self, f"l_d_{kind}")

    def check(self, tol: float = 1e-6) -> None:
        """Raise AssertionError if the sum identities do not hold."""
        im = sum(self.image_kind_total(k) for k in ("real", "imag", "abs"))
        scale = max(1.0, abs(self.l_im_total))
        assert abs(im - self.l_im_total) <= tol * scale, f"l_im_total {self.l_im_total} != {im}"
        lr = self.l_a + self.l_sdr
        assert abs(lr - self.l_r) <= tol * max(1.0, abs(lr)), f"l_r {self.l_r} != {lr}"
        tot = self.alpha * self.l_im_total + (1 - self.alpha) * self.l_r
        assert abs(tot - self.total) <= tol * max(1.0, abs(tot)), f"total {self.total} != {tot}"

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_record(self, **extra) -> str:
        """One JSON line; extra fields first, then the loss fields in FIELD_ORDER."""
        rec = dict(extra)
        rec.update((k, getattr(self, k)) for k in FIELD_ORDER)
        return json.dumps(rec)
