"""FFT convolution and regularized Fourier deconvolution.

The image is embedded in a zero-padded canvas of at least twice each
dimension (next power of two) before transforming; the zero frame acts
like a lens hood, absorbing light that would otherwise wrap around.
"""

from __future__ import annotations

import numpy as np

from .imops import as_image, check_kernel


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def padded_shape(h: int, w: int, kh: int = 1, kw: int = 1) -> tuple[int, int]:
    return _next_pow2(max(2 * h, kh)), _next_pow2(max(2 * w, kw))


def kernel_spectrum(k: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """FFT of the kernel with its center tap rolled to the canvas origin."""
    kh, kw = k.shape
    kpad = np.zeros(shape)
    kpad[:kh, :kw] = k
    kpad = np.roll(kpad, (-(kh // 2), -(kw // 2)), axis=(0, 1))
    return np.fft.rfft2(kpad)


def _per_channel(img, fn):
    if img.ndim == 2:
        return fn(img)
    out = np.empty_like(img)
    for c in range(img.shape[2]):
        out[:, :, c] = fn(img[:, :, c])
    return out


def convolve_fft_padded(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Linear convolution via the padded Fourier path (zero boundary)."""
    img = as_image(img)
    k = check_kernel(k)
    h, w = img.shape[:2]
    shape = padded_shape(h, w, *k.shape)
    K = kernel_spectrum(k, shape)

    def one(ch):
        canvas = np.zeros(shape)
        canvas[:h, :w] = ch
        res = np.fft.irfft2(np.fft.rfft2(canvas) * K, s=shape)
        return res[:h, :w]

    return _per_channel(img, one)


def wiener_divide(img: np.ndarray, k: np.ndarray, reg: float) -> np.ndarray:
    """Regularized Fourier division conj(K)/(|K|^2 + reg); no clamping."""
    img = as_image(img)
    k = check_kernel(k)
    if reg <= 0:
        raise ValueError("reg must be positive")
    h, w = img.shape[:2]
    shape = padded_shape(h, w, *k.shape)
    K = kernel_spectrum(k, shape)
    filt = np.conj(K) / (np.abs(K) ** 2 + reg)

    def one(ch):
        canvas = np.zeros(shape)
        canvas[:h, :w] = ch
        res = np.fft.irfft2(np.fft.rfft2(canvas) * filt, s=shape)
        return res[:h, :w]

    return _per_channel(img, one)


def deconvolve_wiener(img: np.ndarray, k: np.ndarray, reg: float) -> np.ndarray:
    """Wiener deconvolution, clamped to non-negative radiance."""
    return np.maximum(wiener_divide(img, k, reg), 0.0)
