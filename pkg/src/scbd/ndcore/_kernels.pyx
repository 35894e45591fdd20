# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for ndcore: patch extraction for convolutions and GELU."""

import numpy as np
cimport numpy as cnp
from libc.math cimport erf, exp, sqrt

cnp.import_array()

ctypedef fused real:
    float
    double

cdef double INV_SQRT2 = 0.7071067811865476
cdef double INV_SQRT2PI = 0.3989422804014327


def im2col(const real[:, :, :, ::1] x, int kh, int kw, int stride, int pad):
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t oh = (h + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t ow = (w + 2 * pad - kw) // stride + 1
    dtype = np.float32 if real is float else np.float64
    out_arr = np.zeros((n * oh * ow, c * kh * kw), dtype=dtype)
    cdef real[:, ::1] out = out_arr
    cdef Py_ssize_t b, ci, i, j, oy, ox, iy, ix, row, col
    for b in range(n):
        for oy in range(oh):
            for ox in range(ow):
                row = (b * oh + oy) * ow + ox
                col = 0
                for ci in range(c):
                    for i in range(kh):
                        iy = oy * stride - pad + i
                        for j in range(kw):
                            ix = ox * stride - pad + j
                            if 0 <= iy < h and 0 <= ix < w:
                                out[row, col] = x[b, ci, iy, ix]
                            col += 1
    return out_arr


def col2im(const real[:, ::1] cols, Py_ssize_t n, Py_ssize_t c, Py_ssize_t h, Py_ssize_t w,
           int kh, int kw, int stride, int pad):
    cdef Py_ssize_t oh = (h + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t ow = (w + 2 * pad - kw) // stride + 1
    if cols.shape[0] != n * oh * ow or cols.shape[1] != c * kh * kw:
        raise ValueError("col2im: column matrix shape does not match image geometry")
    dtype = np.float32 if real is float else np.float64
    img_arr = np.zeros((n, c, h, w), dtype=dtype)
    cdef real[:, :, :, ::1] img = img_arr
    cdef Py_ssize_t b, ci, i, j, oy, ox, iy, ix, row, col
    for b in range(n):
        for oy in range(oh):
            for ox in range(ow):
                row = (b * oh + oy) * ow + ox
                col = 0
                for ci in range(c):
                    for i in range(kh):
                        iy = oy * stride - pad + i
                        for j in range(kw):
                            ix = ox * stride - pad + j
                            if 0 <= iy < h and 0 <= ix < w:
                                img[b, ci, iy, ix] += cols[row, col]
                            col += 1
    return img_arr


def gelu_forward(const real[::1] x):
    cdef Py_ssize_t k, n = x.shape[0]
    dtype = np.float32 if real is float else np.float64
    out_arr = np.empty(n, dtype=dtype)
    cdef real[::1] out = out_arr
    cdef double v
    for k in range(n):
        v = x[k]
        out[k] = <real>(0.5 * v * (1.0 + erf(v * INV_SQRT2)))
    return out_arr


def gelu_backward(const real[::1] x, const real[::1] grad):
    cdef Py_ssize_t k, n = x.shape[0]
    dtype = np.float32 if real is float else np.float64
    out_arr = np.empty(n, dtype=dtype)
    cdef real[::1] out = out_arr
    cdef double v, cdf, pdf
    for k in range(n):
        v = x[k]
        cdf = 0.5 * (1.0 + erf(v * INV_SQRT2))
        pdf = INV_SQRT2PI * exp(-0.5 * v * v)
        out[k] = <real>(grad[k] * (cdf + v * pdf))
    return out_arr
