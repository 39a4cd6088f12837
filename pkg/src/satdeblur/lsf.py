"""Parametric Light Spread Function: rendering, application, and fitting.

The LSF models in-camera scattering as a radially symmetric kernel

    i(r) = p1 * delta(r) + p2 * exp(-p3 * r**p4)

applied to linear radiance through the padded Fourier path.  Fitting
minimizes the L2 distance between log radiance maps of a calibration
capture and the model prediction, using Nelder-Mead simplex descent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .errors import FitInitializationError
from .fourier import padded_shape, wiener_divide
from .imops import as_image

# Taps this far below the peak are zeroed to keep spectra well-conditioned.
TRUNCATION_REL = 1e-12

# Radiance floor applied before taking logs in the fit objective.
LOG_FLOOR = 1e-6


@dataclass(frozen=True)
class LsfParams:
    """Delta-mass weight, scatter amplitude, decay rate, decay exponent."""

    p1: float
    p2: float
    p3: float
    p4: float

    def __post_init__(self):
        if self.p1 <= 0:
            raise ValueError("p1 must be positive")
        if self.p2 < 0:
            raise ValueError("p2 must be non-negative")
        if self.p3 <= 0 or self.p4 <= 0:
            raise ValueError("p3 and p4 must be positive")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p1, self.p2, self.p3, self.p4)


DEFAULT_INIT = LsfParams(0.9, 0.05, 0.4, 1.2)


@dataclass(frozen=True)
class FitOptions:
    floor: float = LOG_FLOOR
    max_iter: int = 4000
    restarts: int = 3
    xatol: float = 1e-8
    fatol: float = 1e-10


def _radial_taps(params: LsfParams, height: int, width: int) -> np.ndarray:
    cy, cx = height // 2, width // 2
    y = np.arange(height) - cy
    x = np.arange(width) - cx
    r = np.hypot(y[:, None], x[None, :])
    taps = params.p2 * np.exp(-params.p3 * r**params.p4)
    taps[cy, cx] += params.p1
    taps[taps < TRUNCATION_REL * (params.p1 + params.p2)] = 0.0
    return taps


def render_lsf(params: LsfParams, width: int, height: int) -> np.ndarray:
    """Discretize the LSF on a width x height canvas (not normalized)."""
    if width < 1 or height < 1:
        raise ValueError("canvas dimensions must be positive")
    return _radial_taps(params, height, width)


def _lsf_spectrum(params: LsfParams, shape: tuple[int, int]) -> np.ndarray:
    taps = _radial_taps(params, *shape)
    taps = np.roll(taps, (-(shape[0] // 2), -(shape[1] // 2)), axis=(0, 1))
    return np.fft.rfft2(taps)


def apply_lsf_raw(img: np.ndarray, params: LsfParams) -> np.ndarray:
    """Linear LSF convolution without the non-negativity clamp.

    Self-adjoint up to the zero boundary (the kernel is symmetric), which
    the saturation solver relies on for its gradient evaluations.
    """
    img = as_image(img)
    h, w = img.shape[:2]
    shape = padded_shape(h, w)
    spec = _lsf_spectrum(params, shape)

    def one(ch):
        canvas = np.zeros(shape)
        canvas[:h, :w] = ch
        res = np.fft.irfft2(np.fft.rfft2(canvas) * spec, s=shape)
        return res[:h, :w]

    if img.ndim == 2:
        return one(img)
    out = np.empty_like(img)
    for c in range(img.shape[2]):
        out[:, :, c] = one(img[:, :, c])
    return out


def apply_lsf(img: np.ndarray, params: LsfParams) -> np.ndarray:
    """Convolve a radiance map with the LSF on the zero-padded canvas."""
    return np.maximum(apply_lsf_raw(img, params), 0.0)


def lsf_wiener_divide(img: np.ndarray, params: LsfParams, reg: float) -> np.ndarray:
    """Regularized Fourier division by the LSF spectrum (may go negative)."""
    h, w = as_image(img).shape[:2]
    size = min(padded_shape(h, w)) - 1
    taps = _radial_taps(params, size, size)
    return wiener_divide(img, taps, reg)


def deconvolve_wiener(img: np.ndarray, k: np.ndarray, reg: float) -> np.ndarray:
    """Wiener deconvolution by an arbitrary kernel, clamped to >= 0."""
    return np.maximum(wiener_divide(img, k, reg), 0.0)


def fit_residual(l_capt, l_in, params: LsfParams, floor: float = LOG_FLOOR) -> float:
    """L2 norm of log(apply_lsf(l_in)) - log(l_capt), both floored."""
    model = apply_lsf(l_in, params)
    diff = np.log(np.maximum(model, floor)) - np.log(np.maximum(l_capt, floor))
    return float(np.sqrt(np.sum(diff * diff)))


class _FastResidual:
    """Log-L2 residual with precomputed spectra and radius grids.

    Fit runs evaluate the objective thousands of times; rendering the LSF
    from a cached (ifftshifted) radius grid and reusing the calibration
    image's FFT makes each evaluation a pair of transforms.
    """

    def __init__(self, l_capt, l_in, floor: float):
        self.h, self.w = l_in.shape[:2]
        self.shape = padded_shape(self.h, self.w)
        canvas = np.zeros(self.shape)
        canvas[: self.h, : self.w] = to_gray_sum(l_in)
        self.f_in = np.fft.rfft2(canvas)
        self.log_capt = np.log(np.maximum(to_gray_sum(l_capt), floor))
        self.floor = floor
        cy, cx = self.shape[0] // 2, self.shape[1] // 2
        y = np.arange(self.shape[0]) - cy
        x = np.arange(self.shape[1]) - cx
        r = np.hypot(y[:, None], x[None, :])
        self.r = np.roll(r, (-cy, -cx), axis=(0, 1))

    def __call__(self, params: LsfParams) -> float:
        taps = params.p2 * np.exp(-params.p3 * self.r**params.p4)
        taps[0, 0] += params.p1
        model = np.fft.irfft2(self.f_in * np.fft.rfft2(taps), s=self.shape)
        model = model[: self.h, : self.w]
        diff = np.log(np.maximum(model, self.floor)) - self.log_capt
        return float(np.sqrt(np.sum(diff * diff)))


def to_gray_sum(img):
    if img.ndim == 3:
        return img.mean(axis=2)
    return img


def _pack(params: LsfParams) -> np.ndarray:
    return np.log(np.array(params.as_tuple()))


def _unpack(theta: np.ndarray) -> LsfParams:
    p = np.exp(theta)
    return LsfParams(float(min(p[0], 1.5)), float(p[1]), float(p[2]), float(p[3]))


def fit_lsf(l_capt, l_in, init: LsfParams = DEFAULT_INIT, opts: FitOptions = FitOptions()) -> LsfParams:
    """Fit LSF parameters to a (captured, ground-truth) calibration pair."""
    l_capt = as_image(l_capt)
    l_in = as_image(l_in)
    if l_capt.shape != l_in.shape:
        raise ValueError("calibration pair dimensions differ")
    if init.p2 <= 0:
        init = replace(init, p2=1e-4)

    residual = _FastResidual(l_capt, l_in, opts.floor)
    init_res = residual(init)
    if not np.isfinite(init_res):
        raise FitInitializationError(f"non-finite residual at init {init}")

    def objective(theta):
        r = residual(_unpack(theta))
        return r if np.isfinite(r) else np.inf

    theta = _pack(init)
    best_res = init_res
    for _ in range(max(1, opts.restarts)):
        sol = minimize(
            objective,
            theta,
            method="Nelder-Mead",
            options={
                "maxiter": opts.max_iter,
                "maxfev": opts.max_iter,
                "xatol": opts.xatol,
                "fatol": opts.fatol,
                "adaptive": True,
            },
        )
        theta = sol.x
        # Restart from the stagnation point until no further progress.
        if best_res - sol.fun < 1e-9 * max(best_res, 1.0):
            best_res = min(best_res, float(sol.fun))
            break
        best_res = float(sol.fun)

    fitted = _unpack(theta)
    # Simplex descent never returns a point worse than where it started.
    if residual(fitted) > init_res:
        return init
    return fitted
