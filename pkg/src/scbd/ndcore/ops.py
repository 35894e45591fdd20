"""Differentiable ops over :class:`~scbd.ndcore.array.Array`.

The op set is deliberately small: what the losses and the small networks
need. Reductions accumulate in float64 and cast back to the operands'
dtype; matrix products run in the operands' precision through BLAS.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .array import Array, ShapeError, make_result

_F64 = np.float64


def as_array(x, like: Array | None = None) -> Array:
    if isinstance(x, Array):
        return x
    dtype = like.dtype if like is not None else None
    return Array(x, dtype=dtype)


def _result_dtype(*arrays: Array):
    return np.result_type(*(a.data for a in arrays))


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)), dtype=_F64)
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True, dtype=_F64)
    return g.reshape(shape)


def _broadcast_shape(op: str, a: Array, b: Array) -> tuple:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: cannot broadcast shapes {a.shape} and {b.shape}") from None


def _mm(a: np.ndarray, b: np.ndarray, dtype) -> np.ndarray:
    return np.matmul(a, b).astype(dtype, copy=False)


# elementwise binary -------------------------------------------------------

def add(a, b) -> Array:
    a, b = _pair(a, b)
    _broadcast_shape("add", a, b)
    out = a.data + b.data

    def back(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return make_result("add", out, (a, b), back)


def sub(a, b) -> Array:
    a, b = _pair(a, b)
    _broadcast_shape("sub", a, b)
    out = a.data - b.data

    def back(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return make_result("sub", out, (a, b), back)


def mul(a, b) -> Array:
    a, b = _pair(a, b)
    _broadcast_shape("mul", a, b)
    out = a.data * b.data

    def back(g):
        ga = _unbroadcast(g * b.data, a.shape) if a.requires_grad else None
        gb = _unbroadcast(g * a.data, b.shape) if b.requires_grad else None
        return ga, gb

    return make_result("mul", out, (a, b), back)


def div(a, b) -> Array:
    a, b = _pair(a, b)
    _broadcast_shape("div", a, b)
    out = a.data / b.data

    def back(g):
        ga = _unbroadcast(g / b.data, a.shape) if a.requires_grad else None
        gb = _unbroadcast(-g * a.data / (b.data * b.data), b.shape) if b.requires_grad else None
        return ga, gb

    return make_result("div", out, (a, b), back)


def _pair(a, b) -> tuple[Array, Array]:
    if isinstance(a, Array) and not isinstance(b, Array):
        b = Array(b, dtype=a.dtype)
    elif isinstance(b, Array) and not isinstance(a, Array):
        a = Array(a, dtype=b.dtype)
    elif not isinstance(a, Array):
        a, b = Array(a), Array(b)
    return a, b


# elementwise unary --------------------------------------------------------

def neg(a: Array) -> Array:
    return make_result("neg", -a.data, (a,), lambda g: (-g,))


def exp(a: Array) -> Array:
    out = np.exp(a.data)
    return make_result("exp", out, (a,), lambda g: (g * out,))


def log(a: Array) -> Array:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.data)
    return make_result("log", out, (a,), lambda g: (g / a.data,))


def abs(a: Array) -> Array:  # noqa: A001
    out = np.abs(a.data)
    return make_result("abs", out, (a,), lambda g: (g * np.sign(a.data),))


def gelu(a: Array) -> Array:
    """Exact (erf-based) GELU."""
    out = kernels.gelu_forward(a.data)
    return make_result("gelu", out, (a,), lambda g: (kernels.gelu_backward(a.data, g),))


# reductions ---------------------------------------------------------------

def _norm_axis(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax % ndim for ax in axis)


def sum(a: Array, axis=None, keepdims: bool = False) -> Array:  # noqa: A001
    axes = _norm_axis(axis, a.ndim)
    out = np.sum(a.data, axis=axes, keepdims=keepdims, dtype=_F64).astype(a.dtype)

    def back(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape).astype(a.dtype),)

    return make_result("sum", out, (a,), back)


def mean(a: Array, axis=None, keepdims: bool = False) -> Array:
    axes = _norm_axis(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1
    out = (np.sum(a.data, axis=axes, keepdims=keepdims, dtype=_F64) / count).astype(a.dtype)

    def back(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g / count, a.shape).astype(a.dtype),)

    return make_result("mean", out, (a,), back)


# shape and dtype ----------------------------------------------------------

def astype(a: Array, dtype) -> Array:
    dtype = np.dtype(dtype)
    if a.dtype == dtype:
        return a
    out = a.data.astype(dtype)
    return make_result("astype", out, (a,), lambda g: (g.astype(a.dtype),))


def reshape(a: Array, shape) -> Array:
    shape = tuple(shape)
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot reshape {a.shape} into {shape}") from None
    return make_result("reshape", out, (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Array, axes=None) -> Array:
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    axes = tuple(axes)
    if sorted(axes) != list(range(a.ndim)):
        raise ShapeError(f"transpose: axes {axes} invalid for shape {a.shape}")
    inverse = tuple(np.argsort(axes))
    out = a.data.transpose(axes)
    return make_result("transpose", out, (a,), lambda g: (g.transpose(inverse),))


# linear algebra -----------------------------------------------------------

def matmul(a, b) -> Array:
    a, b = _pair(a, b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    dtype = _result_dtype(a, b)
    out = _mm(a.data, b.data, dtype)

    def back(g):
        ga = _mm(g, b.data.T, a.dtype) if a.requires_grad else None
        gb = _mm(a.data.T, g, b.dtype) if b.requires_grad else None
        return ga, gb

    return make_result("matmul", out, (a, b), back)


def linear(x: Array, w: Array, b: Array | None = None) -> Array:
    """``x @ w + b`` with ``w`` stored as (in, out)."""
    y = matmul(x, w)
    return add(y, b) if b is not None else y


# row-wise normalizations --------------------------------------------------

def log_softmax(a: Array, axis: int = -1) -> Array:
    x = a.data.astype(_F64)
    shifted = x - x.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out64 = shifted - lse
    out = out64.astype(a.dtype)
    soft = np.exp(out64)

    def back(g):
        g64 = g.astype(_F64)
        return ((g64 - soft * g64.sum(axis=axis, keepdims=True)).astype(a.dtype),)

    return make_result("log_softmax", out, (a,), back)


def l2_normalize(a: Array, eps: float = 1e-12) -> Array:
    """Divide each row (last axis) by ``sqrt(sum(x**2) + eps)``."""
    x = a.data.astype(_F64)
    norm = np.sqrt((x * x).sum(axis=-1, keepdims=True) + eps)
    y = x / norm
    out = y.astype(a.dtype)

    def back(g):
        g64 = g.astype(_F64)
        return (((g64 - y * (g64 * y).sum(axis=-1, keepdims=True)) / norm).astype(a.dtype),)

    return make_result("l2_normalize", out, (a,), back)


# convolutions -------------------------------------------------------------

def _conv_out(n: int, k: int, stride: int, pad: int) -> int:
    return (n + 2 * pad - k) // stride + 1


def conv2d(x: Array, w: Array, b: Array | None = None, stride: int = 1, padding: int = 0) -> Array:
    """Cross-correlation; ``x`` is (N, C, H, W), ``w`` is (O, C, kh, kw)."""
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
        raise ShapeError(f"conv2d: input {x.shape} incompatible with weight {w.shape}")
    n, c, h, wd = x.shape
    o, _, kh, kw = w.shape
    oh, ow = _conv_out(h, kh, stride, padding), _conv_out(wd, kw, stride, padding)
    if oh < 1 or ow < 1:
        raise ShapeError(f"conv2d: kernel {w.shape} too large for input {x.shape}")
    dtype = _result_dtype(x, w) if b is None else _result_dtype(x, w, b)
    xd = x.data.astype(dtype, copy=False)
    cols = kernels.im2col(xd, kh, kw, stride, padding)
    wmat = w.data.reshape(o, -1)
    out2 = _mm(cols, wmat.T, dtype)
    if b is not None:
        out2 = out2 + b.data
    out = np.ascontiguousarray(out2.reshape(n, oh, ow, o).transpose(0, 3, 1, 2))
    inputs = (x, w) if b is None else (x, w, b)

    def back(g):
        g2 = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(-1, o)
        gx = gw = None
        if x.requires_grad:
            gcols = _mm(g2, wmat, dtype)
            gx = kernels.col2im(gcols, n, c, h, wd, kh, kw, stride, padding).astype(x.dtype)
        if w.requires_grad:
            gw = _mm(g2.T, cols, w.dtype).reshape(w.shape)
        if b is None:
            return gx, gw
        return gx, gw, g2.sum(axis=0, dtype=_F64).astype(b.dtype)

    return make_result("conv2d", out, inputs, back)


def conv_transpose2d(x: Array, w: Array, b: Array | None = None, stride: int = 1,
                     padding: int = 0, output_padding: int = 0) -> Array:
    """Transposed convolution; ``x`` is (N, Cin, H, W), ``w`` is (Cin, Cout, kh, kw)."""
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[0]:
        raise ShapeError(f"conv_transpose2d: input {x.shape} incompatible with weight {w.shape}")
    if output_padding >= stride and output_padding > 0:
        raise ShapeError("conv_transpose2d: output_padding must be smaller than stride")
    n, cin, h, wd = x.shape
    _, cout, kh, kw = w.shape
    oh = (h - 1) * stride - 2 * padding + kh + output_padding
    ow = (wd - 1) * stride - 2 * padding + kw + output_padding
    dtype = _result_dtype(x, w) if b is None else _result_dtype(x, w, b)
    x2 = np.ascontiguousarray(x.data.transpose(0, 2, 3, 1)).reshape(-1, cin)
    wmat = w.data.reshape(cin, -1)
    cols = _mm(x2, wmat, dtype)
    out = kernels.col2im(cols, n, cout, oh, ow, kh, kw, stride, padding)
    if b is not None:
        out = out + b.data.reshape(1, cout, 1, 1)
    inputs = (x, w) if b is None else (x, w, b)

    def back(g):
        gcols = kernels.im2col(g.astype(dtype, copy=False), kh, kw, stride, padding)
        gx = gw = None
        if x.requires_grad:
            gx2 = _mm(gcols, wmat.T, x.dtype)
            gx = np.ascontiguousarray(gx2.reshape(n, h, wd, cin).transpose(0, 3, 1, 2))
        if w.requires_grad:
            gw = _mm(x2.T, gcols, w.dtype).reshape(w.shape)
        if b is None:
            return gx, gw
        return gx, gw, g.sum(axis=(0, 2, 3), dtype=_F64).astype(b.dtype)

    return make_result("conv_transpose2d", out, inputs, back)
