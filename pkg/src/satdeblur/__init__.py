"""Saturation-aware space-variant blind image deblurring."""

from .darkchannel import dark_channel, select_dark_pixels
from .deblur import DeblurConfig, deblur_blind, deconvolve_final, estimate_kernel, identity_backend
from .errors import (
    EmptyRegionError,
    FitInitializationError,
    KernelEstimationError,
    NoSaturationDetected,
    SatDeblurError,
    SaturationEstimationUnavailable,
    SelectionEmpty,
)
from .fourier import convolve_fft_padded, deconvolve_wiener
from .imops import (
    centroid,
    connected_components,
    convolve_spatial,
    delta_kernel,
    gradient_magnitude,
    normalize_kernel,
    to_gray,
)
from .lsf import DEFAULT_INIT, FitOptions, LsfParams, apply_lsf, fit_lsf, fit_residual, render_lsf
from .metrics import (
    evaluate_pair,
    geometric_mean_metric,
    psnr,
    ssim,
    ssim_weighted_psnr,
    write_metric_table,
)
from .patches import (
    PatchScore,
    SelectionConfig,
    blur_score,
    dominant_centroid,
    rank_and_select,
    saturation_mask,
    score_patches,
    sharpness_score,
)
from .pipeline import PipelineResult, glare_aware_backend, run_pipeline
from .satestimate import (
    SatSolverConfig,
    SaturationEstimate,
    estimate_saturation,
    replace_saturated_pixels,
)
from .synth import (
    DegradeSpec,
    SceneSpec,
    Source,
    blur_ladder,
    calibration_pair,
    default_scene,
    degrade,
    exposure_ladder,
    render_scene,
    streetlight_scene,
)

__version__ = "0.1.0"
