"""Central finite-difference check of reverse-mode gradients."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .autograd import Tensor


def relative_error(a: float, b: float, floor: float = 1e-8) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)


def gradcheck(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    n_points: int = 10,
    eps: float = 1e-4,
    seed: int = 0,
) -> float:
    """Return the worst relative error between autodiff and central differences.

    ``fn`` must rebuild the graph from ``inputs`` on every call and return a
    scalar.  ``n_points`` coordinates are drawn at random across all inputs.
    Inputs should be float64 for the usual 1e-4 tolerances to be meaningful.
    """
    for t in inputs:
        t.grad = None
    loss = fn()
    loss.backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs]

    rng = np.random.default_rng(seed)
    sizes = np.array([t.size for t in inputs])
    worst = 0.0
    for _ in range(n_points):
        k = int(rng.choice(len(inputs), p=sizes / sizes.sum()))
        t = inputs[k]
        i = int(rng.integers(t.size))
        flat = t.data.reshape(-1)
        orig = flat[i]
        flat[i] = orig + eps
        up = float(fn().data)
        flat[i] = orig - eps
        down = float(fn().data)
        flat[i] = orig
        numeric = (up - down) / (2 * eps)
        worst = max(worst, relative_error(numeric, float(analytic[k].reshape(-1)[i])))
    return worst
