"""Lifted ("complex") layers.

Each layer owns ONE set of real parameters and applies it to the real and the
imaginary part alike.  Additive offsets (biases, LayerNorm shifts, the
softmax's uniform response to a zero row) act on the real branch only when
``centered`` is on, so purely real inputs stay purely real.
"""
from __future__ import annotations

from collections import OrderedDict
from typing import Iterator

import numpy as np
from scipy import stats

from .autograd import Tensor, layer_norm, softmax
from .complex import ComplexTensor
from .functional import conv2d, max_pool2d, upsample_nearest


class Module:
    """Minimal module container: attribute-discovered parameters and children."""

    training: bool = True

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for key, value in vars(self).items():
            name = f"{prefix}{key}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(name + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((k, p.data.copy()) for k, p in self.named_parameters())

    def load_state_dict(self, state: dict) -> None:
        own = dict(self.named_parameters())
        missing = set(own) - set(state)
        extra = set(state) - set(own)
        if missing or extra:
            raise KeyError(f"state mismatch; missing={sorted(missing)} unexpected={sorted(extra)}")
        for k, p in own.items():
            if p.shape != tuple(state[k].shape):
                raise ValueError(f"{k}: expected shape {p.shape}, got {state[k].shape}")
            p.data = np.array(state[k], dtype=p.dtype, copy=True)

    def modules(self) -> Iterator["Module"]:
        yield self
        for value in vars(self).values():
            if isinstance(value, Module):
                yield from value.modules()
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Module):
                        yield from item.modules()

    def train(self, mode: bool = True) -> "Module":
        for m in self.modules():
            m.training = mode
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())


def trunc_normal(rng: np.random.Generator, shape, std: float = 0.02, dtype=np.float32) -> Tensor:
    """Normal(0, std) truncated to +-2 std, as a trainable leaf."""
    vals = stats.truncnorm.rvs(-2, 2, scale=std, size=shape, random_state=rng)
    return Tensor(np.asarray(vals, dtype=dtype), requires_grad=True)


def _param(arr, dtype) -> Tensor:
    return Tensor(np.asarray(arr, dtype=dtype), requires_grad=True)


class CLinear(Module):
    """``T @ W + b`` applied per part; weight stored as [in, out]."""

    def __init__(self, d_in, d_out, bias=True, *, rng, dtype=np.float32, centered=True, std=0.02):
        self.weight = trunc_normal(rng, (d_in, d_out), std, dtype)
        self.bias = _param(np.zeros(d_out), dtype) if bias else None
        self.centered = centered

    def forward(self, z: ComplexTensor) -> ComplexTensor:
        re = z.real @ self.weight
        im = z.imag @ self.weight
        if self.bias is not None:
            re = re + self.bias
            if not self.centered:
                im = im + self.bias
        return ComplexTensor(re, im)


class CLayerNorm(Module):
    def __init__(self, dim, eps=1e-5, *, dtype=np.float32, centered=True):
        self.gamma = _param(np.ones(dim), dtype)
        self.beta = _param(np.zeros(dim), dtype)
        self.eps = eps
        self.centered = centered

    def forward(self, z: ComplexTensor) -> ComplexTensor:
        re = layer_norm(z.real, self.eps) * self.gamma + self.beta
        im = layer_norm(z.imag, self.eps) * self.gamma
        if not self.centered:
            im = im + self.beta
        return ComplexTensor(re, im)


class CGELU(Module):
    def forward(self, z: ComplexTensor) -> ComplexTensor:
        return ComplexTensor(z.real.gelu(), z.imag.gelu())


class CReLU(Module):
    def forward(self, z: ComplexTensor) -> ComplexTensor:
        return ComplexTensor(z.real.relu(), z.imag.relu())


class CDropout(Module):
    """Inverted dropout; independent masks per part unless ``shared_mask``."""

    def __init__(self, p: float = 0.0, *, rng=None, shared_mask: bool = False):
        self.p = p
        self.rng = rng
        self.shared_mask = shared_mask

    def forward(self, z: ComplexTensor) -> ComplexTensor:
        if not self.training or self.p == 0.0:
            return z
        keep = 1.0 - self.p
        m_re = (self.rng.random(z.shape) < keep).astype(z.dtype) / keep
        m_im = m_re if self.shared_mask else (self.rng.random(z.shape) < keep).astype(z.dtype) / keep
        return ComplexTensor(z.real * m_re, z.imag * m_im)


def csoftmax(z: ComplexTensor, axis: int = -1, mask=None, centered: bool = True) -> ComplexTensor:
    """Per-part softmax.  ``mask`` (additive, real) is applied to both parts.

    Centered form: the imaginary branch is ``softmax(B + mask) -
    softmax(mask)``, so its rows sum to zero and masked entries stay zero.
    """
    re, im = z.real, z.imag
    if mask is not None:
        re = re + mask
        im = im + mask
    p_re = softmax(re, axis)
    p_im = softmax(im, axis)
    if centered:
        base = np.zeros(im.shape, dtype=im.dtype)
        if mask is not None:
            base = base + (mask.data if isinstance(mask, Tensor) else mask)
        p_im = p_im - softmax(Tensor(base), axis).data
    return ComplexTensor(p_re, p_im)


class CConv2d(Module):
    """Lifted 2-D convolution on [N, C, H, W] tensors."""

    def __init__(self, c_in, c_out, kernel, stride=1, padding=0, bias=True, *, rng,
                 dtype=np.float32, centered=True):
        bound = 1.0 / np.sqrt(c_in * kernel * kernel)
        self.weight = _param(rng.uniform(-bound, bound, (c_out, c_in, kernel, kernel)), dtype)
        self.bias = _param(np.zeros((1, c_out, 1, 1)), dtype) if bias else None
        self.stride = stride
        self.padding = padding
        self.centered = centered

    def forward(self, z: ComplexTensor) -> ComplexTensor:
        re = conv2d(z.real, self.weight, self.stride, self.padding)
        im = conv2d(z.imag, self.weight, self.stride, self.padding)
        if self.bias is not None:
            re = re + self.bias
            if not self.centered:
                im = im + self.bias
        return ComplexTensor(re, im)


class CMaxPool2d(Module):
    def __init__(self, size: int = 2):
        self.size = size

    def forward(self, z: ComplexTensor) -> ComplexTensor:
        return ComplexTensor(max_pool2d(z.real, self.size), max_pool2d(z.imag, self.size))


class CUpsample(Module):
    def __init__(self, factor: int = 2):
        self.factor = factor

    def forward(self, z: ComplexTensor) -> ComplexTensor:
        return ComplexTensor(upsample_nearest(z.real, self.factor), upsample_nearest(z.imag, self.factor))


class CMLP(Module):
    """CLinear -> CGELU -> CDropout -> CLinear -> CDropout."""

    def __init__(self, dim, hidden, drop=0.0, *, rng, dtype=np.float32, centered=True,
                 shared_mask=False):
        self.fc1 = CLinear(dim, hidden, rng=rng, dtype=dtype, centered=centered)
        self.act = CGELU()
        self.drop1 = CDropout(drop, rng=rng, shared_mask=shared_mask)
        self.fc2 = CLinear(hidden, dim, rng=rng, dtype=dtype, centered=centered)
        self.drop2 = CDropout(drop, rng=rng, shared_mask=shared_mask)

    def forward(self, z: ComplexTensor) -> ComplexTensor:
        return self.drop2(self.fc2(self.drop1(self.act(self.fc1(z)))))
