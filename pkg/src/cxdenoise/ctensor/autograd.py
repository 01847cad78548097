"""Reverse-mode automatic differentiation over dense real numpy arrays.

Every complex quantity in the package is a pair of these real tensors, so the
engine itself never sees complex numbers.  Each op records its parents and a
closure that pushes the output cotangent back to them.
"""
from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import special

_GRAD_ENABLED = True


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


class ContractError(RuntimeError):
    """An operation was called outside its documented contract."""


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def is_grad_enabled() -> bool:
    return _GRAD_ENABLED


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    ndiff = grad.ndim - len(shape)
    if ndiff > 0:
        grad = grad.sum(axis=tuple(range(ndiff)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A node in the computation graph holding a real ndarray.

    Leaves created with ``requires_grad=True`` are the trainable parameters.
    Intermediate nodes keep their gradient after :meth:`backward` so tests can
    inspect any reachable node.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        if isinstance(data, Tensor):
            data = data.data
        arr = np.asarray(data)
        if arr.dtype.kind != "f":
            arr = arr.astype(np.float32)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self.name = name

    # -- construction -----------------------------------------------------
    @classmethod
    def _make(cls, data: np.ndarray, parents: Sequence["Tensor"], backward) -> "Tensor":
        out = cls(data)
        if _GRAD_ENABLED and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    @staticmethod
    def zeros(shape, dtype=np.float32) -> "Tensor":
        return Tensor(np.zeros(shape, dtype=dtype))

    # -- properties -------------------------------------------------------
    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    # -- autodiff ---------------------------------------------------------
    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad += g

    def backward(self, grad: np.ndarray | None = None) -> None:
        """Propagate cotangents from this node to every reachable leaf.

        Without an explicit ``grad`` the node must be a scalar.
        """
        if grad is None:
            if self.data.size != 1:
                raise ContractError(f"backward() needs a scalar loss, got shape {self.shape}")
            grad = np.ones_like(self.data)
        order = _topological_order(self)
        self._accumulate(np.asarray(grad, dtype=self.data.dtype))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def zero_grad(self) -> None:
        self.grad = None

    # -- elementwise arithmetic ------------------------------------------
    def __add__(self, other) -> "Tensor":
        other = _as_tensor(other, self.dtype)

        def bw(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g, self.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(g, other.shape))

        return Tensor._make(self.data + other.data, (self, other), bw)

    __radd__ = __add__

    def __sub__(self, other) -> "Tensor":
        other = _as_tensor(other, self.dtype)

        def bw(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g, self.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(-g, other.shape))

        return Tensor._make(self.data - other.data, (self, other), bw)

    def __rsub__(self, other) -> "Tensor":
        return _as_tensor(other, self.dtype) - self

    def __mul__(self, other) -> "Tensor":
        other = _as_tensor(other, self.dtype)

        def bw(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g * other.data, self.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(g * self.data, other.shape))

        return Tensor._make(self.data * other.data, (self, other), bw)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        other = _as_tensor(other, self.dtype)
        out = self.data / other.data

        def bw(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g / other.data, self.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(-g * out / other.data, other.shape))

        return Tensor._make(out, (self, other), bw)

    def __rtruediv__(self, other) -> "Tensor":
        return _as_tensor(other, self.dtype) / self

    def __neg__(self) -> "Tensor":
        return Tensor._make(-self.data, (self,), lambda g: self._accumulate(-g))

    def __pow__(self, p: float) -> "Tensor":
        if isinstance(p, Tensor):
            raise TypeError("only scalar exponents are supported")
        out = self.data**p

        def bw(g):
            self._accumulate(g * p * self.data ** (p - 1))

        return Tensor._make(out, (self,), bw)

    def __matmul__(self, other) -> "Tensor":
        return matmul(self, other)

    # -- unary functions --------------------------------------------------
    def exp(self) -> "Tensor":
        out = np.exp(self.data)
        return Tensor._make(out, (self,), lambda g: self._accumulate(g * out))

    def log(self) -> "Tensor":
        return Tensor._make(np.log(self.data), (self,), lambda g: self._accumulate(g / self.data))

    def sqrt(self) -> "Tensor":
        out = np.sqrt(self.data)
        return Tensor._make(out, (self,), lambda g: self._accumulate(g * 0.5 / out))

    def abs(self) -> "Tensor":
        return Tensor._make(
            np.abs(self.data), (self,), lambda g: self._accumulate(g * np.sign(self.data))
        )

    def tanh(self) -> "Tensor":
        out = np.tanh(self.data)
        return Tensor._make(out, (self,), lambda g: self._accumulate(g * (1 - out * out)))

    def sigmoid(self) -> "Tensor":
        out = special.expit(self.data)
        return Tensor._make(out, (self,), lambda g: self._accumulate(g * out * (1 - out)))

    def relu(self) -> "Tensor":
        mask = self.data > 0
        return Tensor._make(self.data * mask, (self,), lambda g: self._accumulate(g * mask))

    def gelu(self) -> "Tensor":
        # exact erf form
        x = self.data
        cdf = 0.5 * (1.0 + special.erf(x / np.sqrt(2.0)))
        out = (x * cdf).astype(x.dtype)

        def bw(g):
            pdf = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
            self._accumulate((g * (cdf + x * pdf)).astype(x.dtype))

        return Tensor._make(out, (self,), bw)

    # -- reductions -------------------------------------------------------
    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        out = self.data.sum(axis=axis, keepdims=keepdims)

        def bw(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._accumulate(np.broadcast_to(g, self.shape))

        return Tensor._make(np.asarray(out), (self,), bw)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        if axis is None:
            n = self.size
        else:
            axes = (axis,) if isinstance(axis, int) else axis
            n = int(np.prod([self.shape[a] for a in axes]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def max(self, axis: int, keepdims: bool = False) -> "Tensor":
        out = self.data.max(axis=axis, keepdims=True)
        mask = self.data == out
        # ties share the gradient evenly
        mask = mask / mask.sum(axis=axis, keepdims=True)

        def bw(g):
            if not keepdims:
                g = np.expand_dims(g, axis)
            self._accumulate(g * mask)

        return Tensor._make(out if keepdims else out.squeeze(axis), (self,), bw)

    # -- shape manipulation -----------------------------------------------
    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        try:
            out = self.data.reshape(shape)
        except ValueError as exc:
            raise ShapeError(str(exc)) from None
        return Tensor._make(out, (self,), lambda g: self._accumulate(g.reshape(self.shape)))

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        inv = np.argsort(axes)
        return Tensor._make(
            self.data.transpose(axes), (self,), lambda g: self._accumulate(g.transpose(inv))
        )

    def swapaxes(self, a: int, b: int) -> "Tensor":
        axes = list(range(self.ndim))
        axes[a], axes[b] = axes[b], axes[a]
        return self.transpose(axes)

    @property
    def T(self) -> "Tensor":
        return self.swapaxes(-1, -2)

    def __getitem__(self, idx) -> "Tensor":
        if isinstance(idx, Tensor):
            idx = idx.data
        out = self.data[idx]
        basic = _is_basic_index(idx)

        def bw(g):
            full = np.zeros_like(self.data)
            if basic:
                full[idx] += g
            else:
                np.add.at(full, idx, g)
            self._accumulate(full)

        return Tensor._make(np.array(out, copy=True), (self,), bw)

    def roll(self, shift, axis) -> "Tensor":
        neg = tuple(-s for s in shift) if isinstance(shift, tuple) else -shift
        return Tensor._make(
            np.roll(self.data, shift, axis),
            (self,),
            lambda g: self._accumulate(np.roll(g, neg, axis)),
        )

    def pad(self, pad_width, mode: str = "constant") -> "Tensor":
        """Zero or reflect padding; ``pad_width`` follows ``numpy.pad``."""
        pad_width = [tuple(p) for p in pad_width]
        if mode == "constant":
            slices = tuple(slice(lo, lo + n) for (lo, _), n in zip(pad_width, self.shape))
            return Tensor._make(
                np.pad(self.data, pad_width), (self,), lambda g: self._accumulate(g[slices])
            )
        if mode != "reflect":
            raise ValueError(f"unsupported pad mode {mode!r}")
        # reflect padding is linear: route the adjoint through an index map
        index = np.arange(self.size).reshape(self.shape)
        src = np.pad(index, pad_width, mode="reflect")
        flat = self.data.reshape(-1)

        def bw(g):
            full = np.zeros(self.size, dtype=self.dtype)
            np.add.at(full, src.reshape(-1), g.reshape(-1))
            self._accumulate(full.reshape(self.shape))

        return Tensor._make(flat[src], (self,), bw)


def _is_basic_index(idx) -> bool:
    items = idx if isinstance(idx, tuple) else (idx,)
    return all(isinstance(i, (int, slice, type(None), type(Ellipsis))) for i in items)


def _as_tensor(x, dtype=np.float32) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen and p.requires_grad:
                stack.append((p, False))
    return order


# -- free functions -------------------------------------------------------
def matmul(a: Tensor, b: Tensor) -> Tensor:
    a = _as_tensor(a)
    b = _as_tensor(b, a.dtype)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError("matmul operands need at least 2 dimensions")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    out = np.matmul(a.data, b.data)

    def bw(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape))

    return Tensor._make(out, (a, b), bw)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = list(tensors)
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise ShapeError(str(exc)) from None
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def bw(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                t._accumulate(g[tuple(sl)])

    return Tensor._make(out, tensors, bw)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    return concat([t.reshape(_expand_shape(t.shape, axis)) for t in tensors], axis=axis)


def _expand_shape(shape: tuple, axis: int) -> tuple:
    s = list(shape)
    s.insert(axis if axis >= 0 else len(s) + axis + 1, 1)
    return tuple(s)


def where(cond: np.ndarray, a: Tensor, b: Tensor) -> Tensor:
    a = _as_tensor(a)
    b = _as_tensor(b, a.dtype)
    out = np.where(cond, a.data, b.data)

    def bw(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(np.where(cond, g, 0), a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(np.where(cond, 0, g), b.shape))

    return Tensor._make(out, (a, b), bw)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        x._accumulate(out * (g - (g * out).sum(axis=axis, keepdims=True)))

    return Tensor._make(out, (x,), bw)


def layer_norm(x: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, without affine parameters."""
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    out = xc * rstd

    def bw(g):
        gm = g.mean(axis=-1, keepdims=True)
        gx = (g * out).mean(axis=-1, keepdims=True)
        x._accumulate(((g - gm - out * gx) * rstd).astype(x.dtype))

    return Tensor._make(out.astype(x.dtype), (x,), bw)


def irfft(re: Tensor, im: Tensor, n: int) -> Tensor:
    """Inverse real FFT along the last axis of a split spectrum.

    ``n`` must be odd, so the spectrum has ``(n + 1) // 2`` bins and there is
    no Nyquist bin.  The imaginary part of the DC bin is ignored, as in
    ``numpy.fft.irfft``.
    """
    if n % 2 == 0 or re.shape[-1] != (n + 1) // 2 or re.shape != im.shape:
        raise ShapeError(f"irfft needs {(n + 1) // 2} bins for odd n={n}, got {re.shape}")
    out = np.fft.irfft(re.data + 1j * im.data, n=n, axis=-1).astype(re.dtype)
    scale = np.full(re.shape[-1], 2.0 / n, dtype=re.dtype)
    scale[0] = 1.0 / n

    def bw(g):
        coeffs = np.fft.rfft(g, axis=-1)
        if re.requires_grad:
            re._accumulate((coeffs.real * scale).astype(re.dtype))
        if im.requires_grad:
            gi = coeffs.imag * scale
            gi[..., 0] = 0.0
            im._accumulate(gi.astype(im.dtype))

    return Tensor._make(out, (re, im), bw)


def parameters_norm(grads: Iterable[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads)))
