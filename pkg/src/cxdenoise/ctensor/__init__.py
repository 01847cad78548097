"""Complex tensor value type, lifting rule and the autodiff engine."""
from .autograd import (
    ContractError,
    ShapeError,
    Tensor,
    concat,
    irfft,
    is_grad_enabled,
    layer_norm,
    matmul,
    no_grad,
    softmax,
    stack,
    where,
)
from .complex import ComplexTensor, as_complex, cabs, cconcat, cmatmul, lift
from .gradcheck import gradcheck

__all__ = [
    "ComplexTensor",
    "ContractError",
    "ShapeError",
    "Tensor",
    "as_complex",
    "cabs",
    "cconcat",
    "cmatmul",
    "concat",
    "gradcheck",
    "irfft",
    "is_grad_enabled",
    "layer_norm",
    "lift",
    "matmul",
    "no_grad",
    "softmax",
    "stack",
    "where",
]
