"""Numpy/scipy fallback for the compiled kernels in _kernels.pyx."""

import numpy as np
from scipy.ndimage import minimum_filter


def convolve2d(img, ker, replicate):
    """Direct convolution of a single-channel image with an odd-sized kernel."""
    kh, kw = ker.shape
    cy, cx = kh // 2, kw // 2
    mode = "edge" if replicate else "constant"
    padded = np.pad(img, ((cy, cy), (cx, cx)), mode=mode)
    windows = np.lib.stride_tricks.sliding_window_view(padded, (kh, kw))
    flipped = ker[::-1, ::-1]
    return np.einsum("yxij,ij->yx", windows, flipped)


def window_min(img, size):
    """Sliding minimum over a size x size window, replicate boundary."""
    return minimum_filter(img, size=size, mode="nearest")
