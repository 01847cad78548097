"""Split-form complex tensors built from pairs of real autodiff tensors."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .autograd import ContractError, ShapeError, Tensor, _as_tensor, concat, matmul


class ComplexTensor:
    """A complex array stored as two real tensors, ``real + j * imag``.

    Instances are never mutated in place; every operation returns a new
    tensor.  Gradients are tracked on the two parts independently, i.e. the
    real and imaginary parts are treated as separate real variables.
    """

    __slots__ = ("real", "imag")

    def __init__(self, real, imag=None):
        real = real if isinstance(real, Tensor) else Tensor(np.asarray(real))
        if imag is None:
            imag = Tensor(np.zeros_like(real.data))
        elif not isinstance(imag, Tensor):
            imag = Tensor(np.asarray(imag, dtype=real.dtype))
        if real.shape != imag.shape:
            raise ShapeError(f"real part {real.shape} and imag part {imag.shape} differ")
        self.real = real
        self.imag = imag

    @classmethod
    def from_numpy(cls, z: np.ndarray, dtype=np.float32) -> "ComplexTensor":
        z = np.asarray(z)
        return cls(Tensor(z.real.astype(dtype)), Tensor(np.imag(z).astype(dtype)))

    @classmethod
    def zeros(cls, shape, dtype=np.float32) -> "ComplexTensor":
        return cls(Tensor(np.zeros(shape, dtype)), Tensor(np.zeros(shape, dtype)))

    def numpy(self) -> np.ndarray:
        return self.real.data + 1j * self.imag.data

    @property
    def shape(self) -> tuple:
        return self.real.shape

    @property
    def ndim(self) -> int:
        return self.real.ndim

    @property
    def dtype(self):
        return self.real.dtype

    def __repr__(self) -> str:
        return f"ComplexTensor(shape={self.shape}, dtype={self.dtype})"

    def detach(self) -> "ComplexTensor":
        return ComplexTensor(self.real.detach(), self.imag.detach())

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other) -> "ComplexTensor":
        if isinstance(other, ComplexTensor):
            return ComplexTensor(self.real + other.real, self.imag + other.imag)
        return ComplexTensor(self.real + other, self.imag)

    __radd__ = __add__

    def __sub__(self, other) -> "ComplexTensor":
        if isinstance(other, ComplexTensor):
            return ComplexTensor(self.real - other.real, self.imag - other.imag)
        return ComplexTensor(self.real - other, self.imag)

    def __neg__(self) -> "ComplexTensor":
        return ComplexTensor(-self.real, -self.imag)

    def __mul__(self, other) -> "ComplexTensor":
        """Elementwise complex product; real scalars/tensors scale both parts."""
        if isinstance(other, ComplexTensor):
            a, b, c, d = self.real, self.imag, other.real, other.imag
            return ComplexTensor(a * c - b * d, a * d + b * c)
        return ComplexTensor(self.real * other, self.imag * other)

    __rmul__ = __mul__

    def __matmul__(self, other: "ComplexTensor") -> "ComplexTensor":
        return cmatmul(self, other)

    # -- shape ops (all lifted, they commute with the split) --------------
    def reshape(self, *shape) -> "ComplexTensor":
        return ComplexTensor(self.real.reshape(*shape), self.imag.reshape(*shape))

    def transpose(self, *axes) -> "ComplexTensor":
        return ComplexTensor(self.real.transpose(*axes), self.imag.transpose(*axes))

    def swapaxes(self, a: int, b: int) -> "ComplexTensor":
        return ComplexTensor(self.real.swapaxes(a, b), self.imag.swapaxes(a, b))

    @property
    def T(self) -> "ComplexTensor":
        """Plain transpose of the last two axes; no conjugation."""
        return self.swapaxes(-1, -2)

    def conj(self) -> "ComplexTensor":
        return ComplexTensor(self.real, -self.imag)

    def __getitem__(self, idx) -> "ComplexTensor":
        return ComplexTensor(self.real[idx], self.imag[idx])

    def roll(self, shift, axis) -> "ComplexTensor":
        return ComplexTensor(self.real.roll(shift, axis), self.imag.roll(shift, axis))

    def sum(self, axis=None, keepdims=False) -> "ComplexTensor":
        return ComplexTensor(self.real.sum(axis, keepdims), self.imag.sum(axis, keepdims))

    def mean(self, axis=None, keepdims=False) -> "ComplexTensor":
        return ComplexTensor(self.real.mean(axis, keepdims), self.imag.mean(axis, keepdims))

    def backward(self) -> None:
        """Backpropagate from a real scalar held in complex form."""
        if self.real.size != 1:
            raise ContractError(f"backward() needs a scalar loss, got shape {self.shape}")
        if np.any(self.imag.data != 0):
            raise ContractError("backward() needs a real loss; imaginary part is non-zero")
        self.real.backward()


def cconcat(tensors: Sequence[ComplexTensor], axis: int = 0) -> ComplexTensor:
    return ComplexTensor(
        concat([t.real for t in tensors], axis), concat([t.imag for t in tensors], axis)
    )


def lift(
    op: Callable[[Tensor], Tensor], t: ComplexTensor, *, centered: bool = True
) -> ComplexTensor:
    """Apply a real operation to both parts of ``t`` with the same parameters.

    ``centered=True`` subtracts ``op(0)`` from the imaginary branch, so ops
    with an additive offset (a bias, a LayerNorm shift, a softmax) keep purely
    real inputs purely real.  For ops with ``op(0) == 0`` (ReLU, GELU,
    bias-free linear maps, pooling, interpolation) both forms coincide.
    ``centered=False`` is the literal per-part rule ``op(A) + j op(B)``.
    """
    real = op(t.real)
    imag = op(t.imag)
    if real.shape != imag.shape:
        raise ShapeError(f"lifted op produced mismatched parts {real.shape} vs {imag.shape}")
    if centered:
        offset = op(Tensor(np.zeros_like(t.imag.data)))
        if np.any(offset.data != 0):
            imag = imag - offset
    return ComplexTensor(real, imag)


def cmatmul(a: ComplexTensor, b: ComplexTensor) -> ComplexTensor:
    """True complex matrix product over the last two axes."""
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"cmatmul inner dimensions differ: {a.shape} @ {b.shape}")
    ar, ai, br, bi = a.real, a.imag, b.real, b.imag
    return ComplexTensor(matmul(ar, br) - matmul(ai, bi), matmul(ar, bi) + matmul(ai, br))


def cabs(t: ComplexTensor) -> Tensor:
    """Elementwise modulus ``sqrt(A^2 + B^2)``; subgradient 0 at the origin."""
    a, b = t.real, t.imag
    out = np.hypot(a.data, b.data)
    safe = np.where(out > 0, out, 1)

    def bw(g):
        if a.requires_grad:
            a._accumulate(g * np.where(out > 0, a.data / safe, 0))
        if b.requires_grad:
            b._accumulate(g * np.where(out > 0, b.data / safe, 0))

    return Tensor._make(out, (a, b), bw)


def as_complex(x) -> ComplexTensor:
    if isinstance(x, ComplexTensor):
        return x
    if isinstance(x, np.ndarray) and np.iscomplexobj(x):
        return ComplexTensor.from_numpy(x)
    return ComplexTensor(_as_tensor(x))
