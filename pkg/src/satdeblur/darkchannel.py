"""Dark channel prior and dark-pixel selection within chosen patches."""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import EmptyRegionError
from .imops import as_image


def dark_channel(img: np.ndarray, patch: int = 5) -> np.ndarray:
    """Per-pixel minimum over a patch x patch window and over channels.

    Replicate boundary, so image borders do not fabricate dark pixels.
    """
    img = as_image(img)
    if patch % 2 == 0:
        raise ValueError("patch size must be odd")
    chan_min = img.min(axis=2) if img.ndim == 3 else img
    return kernels.window_min(np.ascontiguousarray(chan_min), patch)


def select_dark_pixels(img: np.ndarray, patches, quantile: float = 0.05, patch: int = 5) -> np.ndarray:
    """Mark the darkest `quantile` fraction of dark-channel values in `patches`.

    `patches` is an iterable of (row, col, size) rectangles.  Ties are broken
    by row-major scan order.  Returns a boolean mask over the full image.
    """
    img = as_image(img)
    if not 0 < quantile <= 1:
        raise ValueError("quantile must be in (0, 1]")
    patches = list(patches)
    if not patches:
        raise EmptyRegionError("no patches to select dark pixels from")

    h, w = img.shape[:2]
    region = np.zeros((h, w), dtype=bool)
    for r, c, size in patches:
        region[r : r + size, c : c + size] = True

    dc = dark_channel(img, patch)
    flat_idx = np.flatnonzero(region.ravel())
    values = dc.ravel()[flat_idx]
    count = int(np.ceil(quantile * flat_idx.size))
    order = np.argsort(values, kind="stable")[:count]

    mask = np.zeros((h, w), dtype=bool)
    mask.ravel()[flat_idx[order]] = True
    return mask
