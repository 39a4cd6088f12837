"""Exception types shared across the package."""


class SatDeblurError(Exception):
    """Base class for all package errors."""


class EmptyRegionError(SatDeblurError):
    """An operation that needs a non-empty pixel set received an empty one."""


class NoSaturationDetected(SatDeblurError):
    """No saturated pixels found; the pipeline falls back to plain deblurring."""


class SelectionEmpty(SatDeblurError):
    """No patch survived the blur/sharpness filters."""


class SaturationEstimationUnavailable(SatDeblurError):
    """The dark-pixel set is empty; saturation recovery cannot run."""


class FitInitializationError(SatDeblurError):
    """The LSF fit objective is not finite at the initial parameters."""


class KernelEstimationError(SatDeblurError):
    """Blind kernel estimation received degenerate (gradient-free) data."""
