"""Radiance recovery for clipped pixels from stray-light evidence.

The observed value at a dark pixel inside a minimally blurred patch is,
to first order, LSF-scattered light from the saturated source plus a small
unsaturated term.  The solver jointly fits the source radiance (one value
per saturated pixel, bounded below by the clip level), a flat ambient
offset, and a per-pixel unsaturated scatter term (sparsity-penalized,
non-negative) by projected proximal gradient descent with a backtracking
line search.

The flat offset is what keeps the fit identifiable: the source tail varies
strongly with distance across the dark set while the ambient floor (halo
radiance, clipped-noise offset, diffuse stray light) is nearly constant, so
only the distance-shaped part of the signal is attributed to the source.
The sparsity weight is deliberately large: with the offset in the model the
per-pixel term is reserved for gross outliers (a stray bright speckle's
scatter), and for well-behaved pixels the fit reduces to least squares on
the source profile plus a constant.  A small weight would instead let the
per-pixel term absorb the residual before the source amplitude can claim
it, freezing the amplitude far below its optimum.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import SaturationEstimationUnavailable
from .imops import as_image
from .lsf import LsfParams, apply_lsf, apply_lsf_raw, lsf_wiener_divide

SAT_LEVEL = 1.0


@dataclass(frozen=True)
class SatSolverConfig:
    lam: float = 0.05
    max_iters: int = 300
    step: float = 1.0
    tol: float = 1e-5
    wiener_reg: float = 1e-3
    # Slack on the scatter-vs-observation bound; absorbs observation noise
    # (a single down-fluctuated pixel must not zero out the whole estimate).
    constraint_slack: float = 0.02

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class SaturationEstimate:
    """Recovered radiance at saturated pixels plus the co-estimated scatter."""

    sat_mask: np.ndarray
    x_s: np.ndarray  # (n_masked, channels) radiance values, >= clip level
    x_up: np.ndarray  # image-shaped scatter term, supported on the dark set
    residual_history: list[float] = field(default_factory=list)


def _channels(img):
    if img.ndim == 2:
        return [img]
    return [img[:, :, c] for c in range(img.shape[2])]


def _embed(values, mask):
    out = np.zeros(mask.shape)
    out[mask] = values
    return out


def _operator_norm(scatter_at_dark, adjoint_from_dark, n_sat, iters=15):
    """Power iteration for the spectral norm of the dark-pixel scatter map."""
    rng = np.random.default_rng(0)
    t = rng.standard_normal(n_sat)
    t /= np.linalg.norm(t)
    sigma = 0.0
    for _ in range(iters):
        t = adjoint_from_dark(scatter_at_dark(t))
        sigma = np.linalg.norm(t)
        if sigma < 1e-30:
            return 1e-15
        t /= sigma
    return np.sqrt(sigma)


def _solve_channel(y, sat_mask, dark, params: LsfParams, cfg: SatSolverConfig):
    y_u = np.where(sat_mask, 0.0, y)
    y_d = y[dark]
    unsat = ~sat_mask

    def scatter_full(xs_vals):
        return apply_lsf_raw(_embed(xs_vals, sat_mask), params)

    def scatter_at_dark(xs_vals):
        return scatter_full(xs_vals)[dark]

    def adjoint_from_dark(w):
        return apply_lsf_raw(_embed(w, dark), params)[sat_mask]

    n_sat = int(sat_mask.sum())
    n_dark = int(dark.sum())

    # The baseline is the scatter of the clipped region at the clip level; a
    # flat offset c soaks up the ambient floor and v the remaining per-pixel
    # pollution.
    base_full = scatter_full(np.full(n_sat, SAT_LEVEL))
    base = base_full[dark]

    def objective(t, c, v):
        r = y_d - base - scatter_at_dark(t) - c - v
        return 0.5 * float(np.dot(r, r)) + cfg.lam * float(np.abs(v).sum())

    slack = cfg.constraint_slack

    def project_b(t):
        """Scale the excess so LSF scatter never exceeds observation (plus
        slack) at unsaturated pixels (constraint family b)."""
        if t.max(initial=0.0) <= 0:
            return t
        tail = apply_lsf_raw(_embed(t, sat_mask), params)
        bound = y_u + slack
        violated = unsat & (base_full + tail > bound) & (tail > 1e-12)
        if not violated.any():
            return t
        ratios = (bound[violated] - base_full[violated]) / tail[violated]
        alpha = float(np.clip(ratios.min(), 0.0, 1.0))
        return t * alpha

    # Noise alone makes the Wiener division ring slightly negative, so the
    # non-negativity check (constraint c) is relative to the floor already
    # present with no excess amplitude at all.
    neg_floor = float(
        lsf_wiener_divide(base_full + y_u, params, cfg.wiener_reg).min()
    )
    neg_floor = min(neg_floor, 0.0) - slack

    def violates_c(t):
        num = base_full + apply_lsf_raw(_embed(t, sat_mask), params) + y_u
        w = lsf_wiener_divide(num, params, cfg.wiener_reg)
        return float(w.min()) < neg_floor

    # First-order unclipping guess: observed value over the delta mass.
    t = np.maximum(y[sat_mask] / params.p1 - SAT_LEVEL, 0.0)
    t = project_b(t)
    c = 0.0
    v = np.zeros(n_dark)

    # The scatter operator has spectral norm orders of magnitude below the
    # identity acting on v, so a single shared step starves the radiance
    # block.  Precondition each block with its own curvature estimate.
    lip_t = _operator_norm(scatter_at_dark, adjoint_from_dark, n_sat) ** 2
    step_t = cfg.step / max(lip_t, 1e-12)
    step_c = cfg.step / max(n_dark, 1)
    step_v = cfg.step
    scale = 1.0

    history = [objective(t, c, v)]
    for it in range(cfg.max_iters):
        r = y_d - base - scatter_at_dark(t) - c - v
        grad_t = -adjoint_from_dark(r)
        grad_c = -float(r.sum())
        grad_v = -r
        accepted = False
        s = scale
        for _ in range(40):
            t_new = np.maximum(t - s * step_t * grad_t, 0.0)
            c_new = max(c - s * step_c * grad_c, 0.0)
            v_new = np.maximum(v - s * step_v * grad_v - s * step_v * cfg.lam, 0.0)
            t_new = project_b(t_new)
            for _ in range(8):
                if not violates_c(t_new):
                    break
                t_new *= 0.9
            f_new = objective(t_new, c_new, v_new)
            if f_new <= history[-1] + 1e-15:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break
        t, c, v = t_new, c_new, v_new
        history.append(f_new)
        scale = min(s * 1.5, 4.0)
        prev, cur = history[-2], history[-1]
        if it >= 10 and prev - cur <= cfg.tol * max(abs(prev), 1e-30):
            break

    return SAT_LEVEL + t, c + v, history


def estimate_saturation(
    y: np.ndarray,
    sat_mask: np.ndarray,
    dark: np.ndarray,
    params: LsfParams,
    cfg: SatSolverConfig = SatSolverConfig(),
) -> SaturationEstimate:
    """Recover the true radiance of saturated pixels from dark-pixel evidence."""
    y = as_image(y)
    sat_mask = np.asarray(sat_mask, dtype=bool)
    dark = np.asarray(dark, dtype=bool)
    if sat_mask.shape != y.shape[:2] or dark.shape != y.shape[:2]:
        raise ValueError("mask dimensions do not match the image")
    if not dark.any():
        raise SaturationEstimationUnavailable("dark-pixel set is empty")
    if (sat_mask & dark).any():
        raise ValueError("saturated and dark sets must be disjoint")

    chans = _channels(y)
    n_sat = int(sat_mask.sum())
    xs = np.empty((n_sat, len(chans)))
    xup = np.zeros_like(y, dtype=np.float64)
    xup_chans = _channels(xup)
    history = None
    for i, ch in enumerate(chans):
        xs_c, v_c, hist = _solve_channel(ch, sat_mask, dark, params, cfg)
        xs[:, i] = xs_c
        xup_chans[i][dark] = v_c
        # Keep the first channel's trace; all channels are monotone alike.
        if history is None:
            history = hist
    return SaturationEstimate(sat_mask=sat_mask, x_s=xs, x_up=xup, residual_history=history or [])


def replace_saturated_pixels(y: np.ndarray, est: SaturationEstimate, params: LsfParams) -> np.ndarray:
    """Observed image with clipped pixels replaced by their predicted unclipped values.

    Clipped pixels must receive values consistent with the smooth
    observation around them, so the recovered radiance is pushed back
    through the stray-light forward model and sampled at the clipped
    locations.  Inserting the sharp radiance directly would place a hard
    step at the mask boundary that deconvolution amplifies into ringing.
    The prediction is floored at the observed (clipped) value: clipping
    only ever removes light.
    """
    y = as_image(y)
    if est.sat_mask.shape != y.shape[:2]:
        raise ValueError("estimate does not match image dimensions")
    out = y.astype(np.float64, copy=True)
    chans = _channels(out)
    for c, ch in enumerate(chans):
        sharp = ch.copy()
        sharp[est.sat_mask] = est.x_s[:, min(c, est.x_s.shape[1] - 1)]
        pred = apply_lsf(sharp, params)
        ch[est.sat_mask] = np.maximum(pred[est.sat_mask], ch[est.sat_mask])
    return out


def write_residual_csv(path, history) -> None:
    """Per-iteration objective values, for convergence plots."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "objective"])
        for i, val in enumerate(history):
            writer.writerow([i, val])
