"""Dense float arrays with a minimal reverse-mode differentiation engine."""

from . import kernels
from .array import Array, NonFiniteError, ShapeError, Tape, backward, stop_gradient
from .gradcheck import GradCheckReport, grad_check, relative_error
from .ops import (
    abs,
    add,
    as_array,
    astype,
    conv2d,
    conv_transpose2d,
    div,
    exp,
    gelu,
    l2_normalize,
    linear,
    log,
    log_softmax,
    matmul,
    mean,
    mul,
    neg,
    reshape,
    sub,
    sum,
    transpose,
)

__all__ = [
    "Array", "GradCheckReport", "NonFiniteError", "ShapeError", "Tape",
    "abs", "add", "as_array", "astype", "backward", "conv2d", "conv_transpose2d", "div", "exp",
    "gelu", "grad_check", "kernels", "l2_normalize", "linear", "log", "log_softmax",
    "matmul", "mean", "mul", "neg", "relative_error", "reshape", "stop_gradient", "sub",
    "sum", "transpose",
]
