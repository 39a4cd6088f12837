"""Image quality metrics: PSNR, SSIM, SSIM-weighted PSNR, geometric mean."""

from __future__ import annotations

import csv
import math

import numpy as np
from scipy.ndimage import convolve as nd_convolve

from .imops import as_image, to_gray

PSNR_IDENTICAL = math.inf


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """10 log10(peak^2 / MSE); +inf for identical images."""
    a, b = as_image(a), as_image(b)
    if a.shape != b.shape:
        raise ValueError("image dimensions differ")
    if peak <= 0:
        raise ValueError("peak must be positive")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_IDENTICAL
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    r = size // 2
    x = np.arange(-r, r + 1)
    g = np.exp(-(x * x) / (2 * sigma * sigma))
    win = np.outer(g, g)
    return win / win.sum()


def ssim(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """Mean SSIM with an 11x11 Gaussian window (sigma 1.5)."""
    a, b = to_gray(as_image(a)), to_gray(as_image(b))
    if a.shape != b.shape:
        raise ValueError("image dimensions differ")
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    win = _gaussian_window()

    def filt(x):
        return nd_convolve(x, win, mode="reflect")

    mu_a = filt(a)
    mu_b = filt(b)
    mu_aa = mu_a * mu_a
    mu_bb = mu_b * mu_b
    mu_ab = mu_a * mu_b
    var_a = filt(a * a) - mu_aa
    var_b = filt(b * b) - mu_bb
    cov = filt(a * b) - mu_ab
    num = (2 * mu_ab + c1) * (2 * cov + c2)
    den = (mu_aa + mu_bb + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim_weighted_psnr(p: float, s: float) -> float:
    """PSNR x SSIM, weighting fidelity by perceptual structure."""
    if not math.isfinite(p):
        raise ValueError("PSNR must be finite")
    return p * s


def geometric_mean_metric(p: float, s: float) -> float:
    """sqrt(SSIM * PSNR); sensitive to either score collapsing."""
    if p < 0 or s < 0:
        raise ValueError("inputs must be non-negative")
    return math.sqrt(s * p)


def register_translation(a: np.ndarray, b: np.ndarray, radius: int = 3) -> tuple[int, int]:
    """Exhaustive +-radius shift search minimizing MSE of b against a.

    Meant for real image pairs; synthetic data is aligned by construction.
    """
    a, b = to_gray(as_image(a)), to_gray(as_image(b))
    best = (0, 0)
    best_err = math.inf
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            shifted = np.roll(np.roll(b, dy, axis=0), dx, axis=1)
            ys = slice(max(0, dy), a.shape[0] + min(0, dy))
            xs = slice(max(0, dx), a.shape[1] + min(0, dx))
            err = float(np.mean((a[ys, xs] - shifted[ys, xs]) ** 2))
            if err < best_err:
                best_err = err
                best = (dx, dy)
    return best


def evaluate_pair(restored: np.ndarray, reference: np.ndarray, peak: float = 1.0) -> dict:
    """All four metrics, computed after clamping radiance to [0, peak]."""
    r = np.clip(as_image(restored), 0.0, peak)
    g = np.clip(as_image(reference), 0.0, peak)
    p = psnr(r, g, peak)
    s = ssim(r, g, peak)
    return {
        "psnr": p,
        "ssim": s,
        "wpsnr": ssim_weighted_psnr(p, s) if math.isfinite(p) else math.inf,
        "gm": geometric_mean_metric(p, max(s, 0.0)) if math.isfinite(p) else math.inf,
    }


def write_metric_table(path, rows: list[dict]) -> None:
    """CSV with columns (scene, exposure, blur_level, method, psnr, ssim, wpsnr, gm)."""
    cols = ["scene", "exposure", "blur_level", "method", "psnr", "ssim", "wpsnr", "gm"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in cols})
