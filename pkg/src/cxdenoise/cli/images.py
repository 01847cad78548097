"""8-bit PNG export of real/imag/abs spectro views with a JSON sidecar.

Mapping per view, using that view's own percentiles:

* real, imag: ``255 * (v - p1) / (p99 - p1)``, clipped to [0, 255]
* abs:        ``255 * v / p99``, clipped

Rows are flipped so low frequencies sit at the bottom of the picture.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from ..ctensor import ComplexTensor

KINDS = ("real", "imag", "abs")


def views(image: ComplexTensor, channel: int = 0) -> dict[str, np.ndarray]:
    re = np.asarray(image.real.data[channel], dtype=np.float64)
    im = np.asarray(image.imag.data[channel], dtype=np.float64)
    return {"real": re, "imag": im, "abs": np.hypot(re, im)}


def normalize(v: np.ndarray, kind: str) -> tuple[np.ndarray, dict]:
    if kind == "abs":
        lo, hi = 0.0, float(np.percentile(v, 99))
    else:
        lo, hi = (float(x) for x in np.percentile(v, [1, 99]))
    span = hi - lo if hi > lo else 1.0
    u8 = np.clip(np.rint(255.0 * (v - lo) / span), 0, 255).astype(np.uint8)
    return u8[::-1], {"lo": lo, "hi": hi, "scale": 255.0 / span, "flipped_rows": True}


def export_images(out_dir: str | Path, prefix: str, images: dict[str, ComplexTensor]) -> list[Path]:
    """Write ``{prefix}_{which}_{kind}.png`` for every image and view.

    ``images`` maps a label (``noisy``, ``generated``, ``clean``) to a
    [C, S, S] complex image.  The mapping parameters go to
    ``{prefix}_images.json``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    sidecar = {}
    for which, img in images.items():
        for kind, v in views(img).items():
            u8, params = normalize(v, kind)
            path = out_dir / f"{prefix}_{which}_{kind}.png"
            Image.fromarray(u8).save(path)
            sidecar[path.name] = params
            written.append(path)
    (out_dir / f"{prefix}_images.json").write_text(json.dumps(sidecar, indent=2))
    return written
