# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: direct 2D convolution and sliding-window minimum.

A numpy/scipy fallback with identical semantics lives in _kernels_np.py;
satdeblur.kernels picks one at import time.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def convolve2d(cnp.float64_t[:, ::1] img, cnp.float64_t[:, ::1] ker, bint replicate):
    """Direct convolution of a single-channel image with an odd-sized kernel.

    True convolution (kernel flipped).  Boundary: zero or replicate.
    """
    cdef Py_ssize_t h = img.shape[0]
    cdef Py_ssize_t w = img.shape[1]
    cdef Py_ssize_t kh = ker.shape[0]
    cdef Py_ssize_t kw = ker.shape[1]
    cdef Py_ssize_t cy = kh // 2
    cdef Py_ssize_t cx = kw // 2
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((h, w))
    cdef cnp.float64_t[:, ::1] o = out
    cdef Py_ssize_t y, x, i, j, sy, sx
    cdef double acc, v

    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i in range(kh):
                sy = y + cy - i
                if sy < 0:
                    if not replicate:
                        continue
                    sy = 0
                elif sy >= h:
                    if not replicate:
                        continue
                    sy = h - 1
                for j in range(kw):
                    sx = x + cx - j
                    if sx < 0:
                        if not replicate:
                            continue
                        sx = 0
                    elif sx >= w:
                        if not replicate:
                            continue
                        sx = w - 1
                    acc += ker[i, j] * img[sy, sx]
            o[y, x] = acc
    return out


def window_min(cnp.float64_t[:, ::1] img, Py_ssize_t size):
    """Sliding minimum over a size x size window, replicate boundary."""
    cdef Py_ssize_t h = img.shape[0]
    cdef Py_ssize_t w = img.shape[1]
    cdef Py_ssize_t r = size // 2
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((h, w))
    cdef cnp.float64_t[:, ::1] o = out
    cdef Py_ssize_t y, x, i, j, sy, sx
    cdef double m, v

    for y in range(h):
        for x in range(w):
            m = img[y, x]
            for i in range(-r, r + 1):
                sy = y + i
                if sy < 0:
                    sy = 0
                elif sy >= h:
                    sy = h - 1
                for j in range(-r, r + 1):
                    sx = x + j
                    if sx < 0:
                        sx = 0
                    elif sx >= w:
                        sx = w - 1
                    v = img[sy, sx]
                    if v < m:
                        m = v
            o[y, x] = m
    return out
