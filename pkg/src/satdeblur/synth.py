"""Synthetic scene rendering and forward degradation.

Scenes are linear-radiance images with textured backgrounds, guaranteed
zero-radiance speckles (so the dark channel prior has something to bite
on), and bright disk sources above the sensor clip level.  Degradation
follows the forward model: exposure scaling, LSF scatter, blur, additive
Gaussian noise, then clipping to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fourier import convolve_fft_padded
from .imops import as_image, check_kernel, delta_kernel
from .lsf import LsfParams, apply_lsf

DARK_LEVEL = 0.02
DARK_FRACTION = 0.01


@dataclass(frozen=True)
class Source:
    center: tuple[float, float]  # (x, y)
    radius: float
    radiance: float  # sensor units, >= 1 saturates at exposure 1

    def __post_init__(self):
        if self.radiance < 1:
            raise ValueError("source radiance must be >= 1 sensor unit")


@dataclass(frozen=True)
class SceneSpec:
    size: int = 96
    sources: tuple[Source, ...] = ()
    seed: int = 0
    n_shapes: int = 12
    n_strokes: int = 20
    speckle_fraction: float = 0.02
    # Radius of a near-zero radiance ring around each source (tunnel-at-night
    # look); 0 disables it.  Gives the stray-light model dark pixels whose
    # observed value is dominated by scatter from the source.
    dark_halo: float = 0.0
    # Multiplier on the textured background before sources are stamped in.
    # Values well below 1 give night-scene statistics, where stray light from
    # unclipped content is negligible next to glare from the clipped sources.
    background_scale: float = 1.0
    # Bright unsaturated strokes (lit signage, windows) stamped outside the
    # dark halos at full scale, unaffected by background_scale.  They give
    # blind kernel estimation high-contrast edges to work with in otherwise
    # dim scenes.
    n_bright_strokes: int = 0
    # Value range of the bright strokes.  Exposure sweeps shrink this so the
    # strokes stay below clip at the top of the ladder.
    bright_range: tuple[float, float] = (0.4, 0.85)


@dataclass(frozen=True)
class DegradeSpec:
    lsf: LsfParams
    blur: np.ndarray | int = 1  # kernel, or frame count for the blur ladder
    noise_sigma: float = 0.005
    exposure_scale: float = 1.0

    def __post_init__(self):
        if self.exposure_scale <= 0:
            raise ValueError("exposure_scale must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")

    def blur_kernel(self) -> np.ndarray:
        if isinstance(self.blur, (int, np.integer)):
            return blur_ladder(int(self.blur))
        return check_kernel(self.blur)


def blur_ladder(k_frames: int) -> np.ndarray:
    """Horizontal box kernel of 2k-1 taps, the frame-merge motion analog."""
    if not 1 <= k_frames <= 5:
        raise ValueError("k_frames must be in 1..5")
    n = 2 * k_frames - 1
    if n == 1:
        return delta_kernel(1)
    return np.full((1, n), 1.0 / n)


def exposure_ladder() -> list[float]:
    """Doubling exposure scales mirroring a 4.8 ms .. 78.1 ms sweep."""
    return [1.0, 2.0, 4.0, 8.0, 16.0]


def render_scene(spec: SceneSpec) -> np.ndarray:
    """Deterministic textured radiance scene with dark speckles and sources."""
    rng = np.random.default_rng(spec.seed)
    n = spec.size
    yy, xx = np.mgrid[0:n, 0:n].astype(np.float64) / max(n - 1, 1)

    # Smooth illumination gradient.
    a, b = rng.uniform(-0.2, 0.2, size=2)
    img = 0.25 + a * xx + b * yy

    # Random soft shapes.
    for _ in range(spec.n_shapes):
        cx, cy = rng.uniform(0, 1, size=2)
        r = rng.uniform(0.05, 0.25)
        val = rng.uniform(0.05, 0.85)
        d2 = (xx - cx) ** 2 + (yy - cy) ** 2
        inside = d2 < r * r
        img[inside] = 0.5 * img[inside] + 0.5 * val

    # Text-like strokes: short high-contrast segments, alternating bright/dark.
    for i in range(spec.n_strokes):
        x0, y0 = rng.integers(0, n, size=2)
        length = int(rng.integers(4, max(5, n // 6)))
        horizontal = rng.random() < 0.5
        val = 0.9 if i % 2 == 0 else 0.01
        if horizontal:
            img[y0, x0 : min(n, x0 + length)] = val
        else:
            img[y0 : min(n, y0 + length), x0] = val

    # Zero-radiance speckles guarantee dark-channel validity.
    n_speck = max(1, int(spec.speckle_fraction * n * n))
    idx = rng.choice(n * n, size=n_speck, replace=False)
    img.ravel()[idx] = 0.0

    img = np.clip(img, 0.0, 0.95) * spec.background_scale

    if spec.n_bright_strokes:
        yy, xx = np.mgrid[0:n, 0:n]

        def keepout(ys, xs_):
            """True where a pixel is clear of every source's halo."""
            ok = np.ones(np.shape(ys), dtype=bool)
            for src in spec.sources:
                sx, sy = src.center
                r = max(spec.dark_halo, src.radius) + 2
                ok &= (xs_ - sx) ** 2 + (ys - sy) ** 2 > r * r
            return ok

        for _ in range(spec.n_bright_strokes):
            for _ in range(50):
                x0, y0 = rng.integers(0, n, size=2)
                if keepout(y0, x0):
                    break
            length = int(rng.integers(5, max(6, n // 5)))
            val = rng.uniform(*spec.bright_range)
            if rng.random() < 0.5:
                sl = np.s_[y0, x0 : min(n, x0 + length)]
            else:
                sl = np.s_[y0 : min(n, y0 + length), x0]
            seg_ok = keepout(yy[sl], xx[sl])
            img[sl] = np.where(seg_ok, val, img[sl])

    for src in spec.sources:
        sx, sy = src.center
        d2 = (np.mgrid[0:n][:, None] - sy) ** 2 + (np.mgrid[0:n][None, :] - sx) ** 2
        if spec.dark_halo > 0:
            halo = d2 <= spec.dark_halo**2
            img[halo] = 0.002
            img[halo & (rng.random((n, n)) < 0.1)] = 0.0
        img[d2 <= src.radius**2] = src.radiance

    dark = np.count_nonzero(img < DARK_LEVEL)
    if dark < DARK_FRACTION * n * n:
        raise AssertionError("scene violates the dark-pixel invariant")
    return img


def degrade(x: np.ndarray, spec: DegradeSpec, seed: int = 0) -> np.ndarray:
    """clip(blur * (lsf * (exposure * x)) + noise) into [0, 1]."""
    x = as_image(x)
    scaled = spec.exposure_scale * x
    scattered = apply_lsf(scaled, spec.lsf)
    blurred = convolve_fft_padded(scattered, spec.blur_kernel())
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(seed)
        blurred = blurred + rng.normal(0.0, spec.noise_sigma, size=blurred.shape)
    return np.clip(blurred, 0.0, 1.0)


# Harness LSF: strong direct transmission plus a long stretched-exponential
# glare tail, so scattered light from a clipped source sits well above the
# noise floor tens of pixels away (a heavily flaring lens).
GLARE_LSF = LsfParams(0.9, 0.006, 1.0, 0.5)


def default_scene(
    seed: int = 0,
    size: int = 96,
    radiance: float = 8.0,
    background_scale: float = 0.12,
) -> SceneSpec:
    """Night scene: one bright disk with a dark surround over dim texture."""
    rng = np.random.default_rng(seed + 7919)
    cx = size / 2 + rng.uniform(-size / 8, size / 8)
    cy = size / 2 + rng.uniform(-size / 8, size / 8)
    return SceneSpec(
        size=size,
        sources=(Source((cx, cy), size / 20, radiance),),
        seed=seed,
        dark_halo=size / 2.5,
        background_scale=background_scale,
    )


def streetlight_scene(
    seed: int = 0,
    size: int = 128,
    radiance: float = 4.0,
    background_scale: float = 0.05,
    n_bright_strokes: int = 14,
    bright_range: tuple[float, float] = (0.4, 0.85),
) -> SceneSpec:
    """Night street scene: clipped source, dark surround, lit signage.

    Unlike `default_scene`, the bright unsaturated strokes give blind
    kernel estimation real structure, at the cost of a little extra
    scattered light over the dark halo.
    """
    rng = np.random.default_rng(seed + 7919)
    cx = size / 2 + rng.uniform(-size / 8, size / 8)
    cy = size / 2 + rng.uniform(-size / 8, size / 8)
    return SceneSpec(
        size=size,
        sources=(Source((cx, cy), size / 16, radiance),),
        seed=seed,
        dark_halo=size / 5,
        background_scale=background_scale,
        n_bright_strokes=n_bright_strokes,
        bright_range=bright_range,
    )


def calibration_pair(params: LsfParams, size: int = 64, noise_sigma: float = 0.0, seed: int = 0):
    """Point-source calibration scene: ground truth and LSF-scattered capture.

    Black field with a centered disk of radius 2 px at radiance 1e4, the
    synthetic analog of photographing a small aperture in a dark room.
    """
    l_in = np.zeros((size, size))
    c = size // 2
    yy, xx = np.mgrid[0:size, 0:size]
    l_in[(yy - c) ** 2 + (xx - c) ** 2 <= 4] = 1e4
    l_capt = apply_lsf(l_in, params)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        l_capt = l_capt * (1.0 + noise_sigma * rng.standard_normal(l_capt.shape))
        l_capt = np.maximum(l_capt, 0.0)
    return l_capt, l_in
