"""Adam on real parameter arrays, plus global-norm gradient clipping."""
from __future__ import annotations

import math

import numpy as np

from ..ctensor import Tensor


class NonFiniteGradientError(FloatingPointError):
    def __init__(self, name: str, n_bad: int, size: int):
        super().__init__(f"non-finite gradient in parameter {name!r} ({n_bad} of {size} entries)")
        self.parameter = name


def grads_of(named: list[tuple[str, Tensor]]) -> list[np.ndarray]:
    return [np.zeros_like(p.data) if p.grad is None else p.grad for _, p in named]


def flat_grads(named: list[tuple[str, Tensor]]) -> np.ndarray:
    """All parameter gradients concatenated into one float64 vector."""
    return np.concatenate([g.astype(np.float64).ravel() for g in grads_of(named)])


def check_finite(named: list[tuple[str, Tensor]], grads: list[np.ndarray]) -> None:
    for (name, _), g in zip(named, grads):
        bad = ~np.isfinite(g)
        if bad.any():
            raise NonFiniteGradientError(name, int(bad.sum()), g.size)


def global_norm(grads: list[np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in grads))


def clip_by_global_norm(grads: list[np.ndarray], max_norm: float) -> tuple[list[np.ndarray], float]:
    """Scale all gradients together so their joint L2 norm is at most ``max_norm``."""
    norm = global_norm(grads)
    if max_norm <= 0 or norm <= max_norm:
        return grads, norm
    scale = max_norm / (norm + 1e-12)
    return [g * np.asarray(scale, dtype=g.dtype) for g in grads], norm


class Adam:
    def __init__(self, named_params, lr: float = 1e-3, betas=(0.9, 0.999), eps: float = 1e-8):
        self.named = list(named_params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = {n: np.zeros_like(p.data) for n, p in self.named}
        self.v = {n: np.zeros_like(p.data) for n, p in self.named}

    def step(self, grads: list[np.ndarray] | None = None) -> None:
        """One update; ``grads`` defaults to the parameters' ``.grad`` fields."""
        if grads is None:
            grads = grads_of(self.named)
        check_finite(self.named, grads)
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for (name, p), g in zip(self.named, grads):
            if g.shape != p.data.shape:
                raise ValueError(f"{name}: gradient shape {g.shape} != parameter shape {p.data.shape}")
            m, v = self.m[name], self.v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            denom = np.sqrt(v / c2) + self.eps
            p.data -= (self.lr / c1) * m / denom

    def zero_grad(self) -> None:
        for _, p in self.named:
            p.grad = None

    def state(self) -> dict:
        return {"t": self.t, "m": self.m, "v": self.v}

    def load_state(self, t: int, m: dict, v: dict) -> None:
        names = [n for n, _ in self.named]
        if set(m) != set(names) or set(v) != set(names):
            raise KeyError("optimizer state does not match the parameter set")
        self.t = int(t)
        for n, p in self.named:
            self.m[n] = np.array(m[n], dtype=p.dtype, copy=True)
            self.v[n] = np.array(v[n], dtype=p.dtype, copy=True)
