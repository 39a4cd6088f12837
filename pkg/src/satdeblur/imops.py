"""Core image operations: convolution, gradients, masks, components.

Images are float64 numpy arrays, shape (H, W) for grayscale or (H, W, 3)
for color, holding linear radiance (non-negative, unbounded above).
Kernels are 2D float64 arrays with odd dimensions.  Coordinates follow
(x = column, y = row) with the origin at the top-left pixel.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import label

from . import kernels
from .errors import EmptyRegionError

EIGHT_CONN = np.ones((3, 3), dtype=int)


def as_image(img) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim not in (2, 3):
        raise ValueError(f"expected 2D or 3D image array, got ndim={img.ndim}")
    if img.ndim == 3 and img.shape[2] not in (1, 3):
        raise ValueError(f"expected 1 or 3 channels, got {img.shape[2]}")
    return img


def to_gray(img: np.ndarray) -> np.ndarray:
    """Unweighted channel mean; identity for single-channel input."""
    img = as_image(img)
    if img.ndim == 3:
        return img.mean(axis=2)
    return img


def check_kernel(k: np.ndarray, normalized: bool = False) -> np.ndarray:
    k = np.asarray(k, dtype=np.float64)
    if k.ndim != 2:
        raise ValueError("kernel must be 2D")
    if k.shape[0] % 2 == 0 or k.shape[1] % 2 == 0:
        raise ValueError(f"kernel dimensions must be odd, got {k.shape}")
    if np.any(k < 0):
        raise ValueError("kernel taps must be non-negative")
    if normalized and abs(k.sum() - 1.0) > 1e-9:
        raise ValueError(f"kernel must sum to 1, got {k.sum()}")
    return k


def normalize_kernel(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=np.float64)
    s = k.sum()
    if s <= 0:
        raise ValueError("kernel has non-positive mass")
    return k / s


def delta_kernel(size: int = 1) -> np.ndarray:
    if size % 2 == 0:
        raise ValueError("kernel size must be odd")
    k = np.zeros((size, size))
    k[size // 2, size // 2] = 1.0
    return k


def convolve_spatial(img: np.ndarray, k: np.ndarray, boundary: str = "zero") -> np.ndarray:
    """Direct 2D convolution, per channel.  boundary: 'zero' or 'replicate'."""
    img = as_image(img)
    k = check_kernel(k)
    if boundary not in ("zero", "replicate"):
        raise ValueError(f"unknown boundary mode {boundary!r}")
    replicate = boundary == "replicate"
    if img.ndim == 2:
        return kernels.convolve2d(np.ascontiguousarray(img), np.ascontiguousarray(k), replicate)
    out = np.empty_like(img)
    for c in range(img.shape[2]):
        out[:, :, c] = kernels.convolve2d(
            np.ascontiguousarray(img[:, :, c]), np.ascontiguousarray(k), replicate
        )
    return out


def gradient_magnitude(img: np.ndarray) -> np.ndarray:
    """Per-pixel sqrt(gx^2 + gy^2) with central differences (one-sided at borders)."""
    g = to_gray(img)
    gy, gx = np.gradient(g)
    return np.sqrt(gx * gx + gy * gy)


def connected_components(mask: np.ndarray) -> list[np.ndarray]:
    """8-connected components of a boolean mask.

    Each component is an (n, 2) integer array of (row, col) pixel coordinates.
    """
    mask = np.asarray(mask, dtype=bool)
    labels, n = label(mask, structure=EIGHT_CONN)
    comps = []
    for i in range(1, n + 1):
        rows, cols = np.nonzero(labels == i)
        comps.append(np.column_stack([rows, cols]))
    return comps


def centroid(pixels: np.ndarray) -> tuple[float, float]:
    """Mean coordinate of an (n, 2) array of (row, col) pixels, as (x, y)."""
    pixels = np.asarray(pixels)
    if pixels.size == 0:
        raise EmptyRegionError("centroid of an empty pixel set")
    return float(pixels[:, 1].mean()), float(pixels[:, 0].mean())
