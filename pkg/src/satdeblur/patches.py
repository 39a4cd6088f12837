"""Minimally blurred patch identification near the dominant saturated region.

Each overlapping patch gets three scores: a blur statistic (variance of the
kernel recovered by a short blind Richardson-Lucy run; concentrated kernels
mean sharp data), summed gradient magnitude, and distance to the centroid
of the dominant saturated component.  Patches passing both thresholds are
ranked by kernel variance (descending) then proximity (ascending).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import NoSaturationDetected, SelectionEmpty
from .imops import as_image, connected_components, centroid, gradient_magnitude, to_gray

_EPS = 1e-12
# Kernel updates per latent-image update in the blind proxy (see blur_score).
_KERNEL_INNER_ITERS = 10


@dataclass(frozen=True)
class SelectionConfig:
    patch_size: int = 64
    stride: int | None = None  # defaults to patch_size // 2
    ts: float = 0.98
    tau_b: float = 0.003
    tau_g: float | None = None  # defaults to the 60th percentile per image
    top_n: int = 8
    proxy_iters: int = 10
    proxy_kernel: int = 7

    def __post_init__(self):
        if not 0 < self.ts <= 1:
            raise ValueError("ts must be in (0, 1]")
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")
        if self.stride is not None and self.stride > self.patch_size:
            raise ValueError("stride must not exceed patch_size")

    @property
    def effective_stride(self) -> int:
        return self.stride if self.stride is not None else max(1, self.patch_size // 2)


@dataclass(frozen=True)
class PatchScore:
    row: int
    col: int
    size: int
    blur: float  # kernel-variance statistic, higher = sharper
    sharpness: float
    distance: float

    @property
    def rect(self) -> tuple[int, int, int]:
        return (self.row, self.col, self.size)


def saturation_mask(img: np.ndarray, ts: float = 0.98) -> np.ndarray:
    """Pixels whose channel maximum reaches the saturation threshold."""
    img = as_image(img)
    peak = img.max(axis=2) if img.ndim == 3 else img
    return peak >= ts


def dominant_centroid(mask: np.ndarray) -> tuple[float, float]:
    """Centroid (x, y) of the largest 8-connected saturated component.

    Size ties go to the component whose bounding-box top-left is
    lexicographically smallest in (row, col).
    """
    comps = connected_components(mask)
    if not comps:
        raise NoSaturationDetected("saturation mask is empty")
    best = min(comps, key=lambda c: (-len(c), int(c[:, 0].min()), int(c[:, 1].min())))
    return centroid(best)


def _normalize_for_proxy(patch: np.ndarray) -> np.ndarray | None:
    """Shift/scale patch to mean 1; None for constant (blur-free signal) data."""
    g = to_gray(patch)
    g = g - g.min()
    m = g.mean()
    if m < _EPS:
        return None
    return g / m


def blur_score(patch: np.ndarray, cfg: SelectionConfig = SelectionConfig()) -> float:
    """Variance of the kernel from a short blind Richardson-Lucy alternation.

    Sharp data concentrates the kernel (high variance); blurred data leaves
    it spread (low variance).  Deterministic; invariant to adding a constant.
    """
    ksz = cfg.proxy_kernel
    g = to_gray(patch)
    if min(g.shape) < 2 * ksz:
        raise ValueError(f"patch {g.shape} smaller than 2x proxy kernel {ksz}")
    g = _normalize_for_proxy(patch)
    if g is None:
        return 0.0

    k = np.full((ksz, ksz), 1.0 / ksz**2)
    f = g.copy()
    cy, cx = g.shape[0] - 1, g.shape[1] - 1
    r = ksz // 2
    for _ in range(cfg.proxy_iters):
        # The latent image has far more degrees of freedom than the kernel
        # and absorbs the mismatch first, so the kernel gets several updates
        # per image update or it never leaves the uniform initializer.
        for _ in range(_KERNEL_INNER_ITERS):
            conv = fftconvolve(f, k, mode="same")
            ratio = g / np.maximum(conv, _EPS)
            corr = fftconvolve(ratio, f[::-1, ::-1], mode="full")
            win = corr[cy - r : cy + r + 1, cx - r : cx + r + 1]
            k = np.maximum(k * win / max(f.sum(), _EPS), 0.0)
            s = k.sum()
            if s < _EPS:
                return 0.0
            k /= s

        conv = fftconvolve(f, k, mode="same")
        ratio = g / np.maximum(conv, _EPS)
        f = np.maximum(f * fftconvolve(ratio, k[::-1, ::-1], mode="same"), 0.0)
    return float(np.var(k))


def sharpness_score(patch: np.ndarray) -> float:
    """Summed gradient magnitude over the patch."""
    return float(gradient_magnitude(patch).sum())


def patch_grid(height: int, width: int, cfg: SelectionConfig) -> list[tuple[int, int]]:
    """Top-left corners of overlapping patches covering the image."""
    p, s = cfg.patch_size, cfg.effective_stride
    if height < p or width < p:
        return []
    rows = sorted(set(list(range(0, height - p + 1, s)) + [height - p]))
    cols = sorted(set(list(range(0, width - p + 1, s)) + [width - p]))
    return [(r, c) for r in rows for c in cols]


def score_patches(
    img: np.ndarray, sat_centroid: tuple[float, float], cfg: SelectionConfig = SelectionConfig()
) -> list[PatchScore]:
    """Blur, sharpness, and proximity scores for every grid patch."""
    img = as_image(img)
    h, w = img.shape[:2]
    x_c, y_c = sat_centroid
    p = cfg.patch_size
    scores = []
    for r, c in patch_grid(h, w, cfg):
        patch = img[r : r + p, c : c + p]
        d = float(np.hypot(c + p / 2 - x_c, r + p / 2 - y_c))
        scores.append(
            PatchScore(
                row=r,
                col=c,
                size=p,
                blur=blur_score(patch, cfg),
                sharpness=sharpness_score(patch),
                distance=d,
            )
        )
    return scores


def rank_and_select(scores: list[PatchScore], cfg: SelectionConfig = SelectionConfig()) -> list[PatchScore]:
    """Threshold, rank (variance desc, distance asc), and keep the top N."""
    if not scores:
        raise SelectionEmpty("no patches to rank")
    tau_g = cfg.tau_g
    if tau_g is None:
        tau_g = float(np.percentile([s.sharpness for s in scores], 60.0))
    kept = [s for s in scores if s.blur >= cfg.tau_b and s.sharpness >= tau_g]
    if not kept:
        raise SelectionEmpty("no patch passed the blur/sharpness thresholds")
    kept.sort(key=lambda s: (-s.blur, s.distance, s.row, s.col))
    return kept[: cfg.top_n]


def write_patch_report(path, scores: list[PatchScore], selected: list[PatchScore]) -> None:
    """JSON-lines dump: one record per patch with scores and selection flag."""
    chosen = {s.rect for s in selected}
    with open(path, "w") as fh:
        for s in scores:
            rec = {
                "rect": list(s.rect),
                "b": s.blur,
                "g": s.sharpness,
                "d": s.distance,
                "selected": s.rect in chosen,
            }
            fh.write(json.dumps(rec) + "\n")
