"""Kernel backend selection.

The compiled extension is preferred. Set ``SCBD_PURE_PYTHON=1`` to force the
numpy fallback (used by the benchmark and by the equivalence tests).
"""

import os

import numpy as np

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("SCBD_PURE_PYTHON", "0") != "1":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _fallback


def im2col(x, kh, kw, stride, pad):
    return _impl.im2col(np.ascontiguousarray(x), kh, kw, stride, pad)


def col2im(cols, n, c, h, w, kh, kw, stride, pad):
    return _impl.col2im(np.ascontiguousarray(cols), n, c, h, w, kh, kw, stride, pad)


def gelu_forward(x):
    return _impl.gelu_forward(np.ascontiguousarray(x).reshape(-1)).reshape(x.shape)


def gelu_backward(x, grad):
    flat_x = np.ascontiguousarray(x).reshape(-1)
    flat_g = np.ascontiguousarray(grad, dtype=x.dtype).reshape(-1)
    return _impl.gelu_backward(flat_x, flat_g).reshape(x.shape)
