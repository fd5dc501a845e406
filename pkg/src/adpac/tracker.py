"""Per-frame tracking pipeline: init smoothing, resampling, adaptation, descent."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

from . import _kernels
from .adaptation import (adapt_alpha, adapt_beta, adapt_gamma, adapt_kappa,
                         adapt_zeta, apply_forgetting, resample_weights)
from .contour import (RADIUS_FLOOR, ContourError, PolarContour, perimeter,
                      recenter_resample, update_point_count)
from .energy import WeightSet, sector_geometry, sector_stats
from .image import Frame, GradientField, compute_gradients, sample_bilinear


class InitError(ValueError):
    """Rejected manual initialization."""


@dataclass(frozen=True)
class AdPacParams:
    """Tracking parameters; defaults follow the empirically tuned values."""

    alpha: float = 1.0
    beta: float = 0.0
    gamma: float = 0.05
    kappa: float = 0.8
    zeta: float = 150.0
    nu: float = 0.0012
    mu1: float = 1e-4
    mu2: float = 1.0
    epsilon: float = 1e-4
    spacing: float = 10.0          # target contour point spacing, px
    xi: float = 0.5                # forgetting factor
    tol: float = 1e-4              # equilibrium threshold, px
    max_iters: int = 5000
    r_factor: float = 1.5          # search radius multiplier over max radius
    contraction_sign: int = 1
    spatial_adaptation: bool = True
    temporal_adaptation: bool = True
    stats_refresh: int = 10        # sector statistics refresh period, iterations
    weight_cap: float = 10.0       # per-point weight ceiling, multiples of the median
    step_cap: float = 0.2          # per-point radius change ceiling per iteration, px

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if self.r_factor <= 1.0:
            raise ValueError("r_factor must be > 1")
        if self.contraction_sign not in (-1, 1):
            raise ValueError("contraction_sign must be +1 or -1")
        if self.stats_refresh < 1:
            raise ValueError("stats_refresh must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.mu1 <= 0 or self.mu2 < 0:
            raise ValueError("require mu1 > 0 and mu2 >= 0")
        if self.weight_cap < 1.0:
            raise ValueError("weight_cap must be >= 1")
        if self.step_cap <= 0:
            raise ValueError("step_cap must be positive")


@dataclass(frozen=True)
class TrackerState:
    """Everything carried from one frame to the next."""

    contour: PolarContour
    weights: WeightSet
    search_radius: float
    ref_intensity: np.ndarray     # boundary intensities of the last segmented frame
    frame: Frame
    gradients: GradientField
    frame_index: int = 0
    warnings: int = 0


@dataclass(frozen=True)
class MinimizeResult:
    contour: PolarContour
    iterations: int
    max_dr: float
    converged: bool
    aborted: bool
    warnings: int


@dataclass(frozen=True)
class FrameRecord:
    frame_index: int
    contour: PolarContour
    iterations: int
    max_dr: float
    warnings: int
    aborted: bool


# -- manual polygon helpers --------------------------------------------------

def _segments_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _is_simple_polygon(pts: np.ndarray) -> bool:
    m = pts.shape[0]
    for i in range(m):
        a, b = pts[i], pts[(i + 1) % m]
        if np.allclose(a, b):
            return False
        for j in range(i + 1, m):
            if j == i or (j + 1) % m == i or (i + 1) % m == j:
                continue
            if _segments_intersect(a, b, pts[j], pts[(j + 1) % m]):
                return False
    return True


def _point_in_polygon(point, pts: np.ndarray) -> bool:
    x, y = point
    inside = False
    m = pts.shape[0]
    for i in range(m):
        xa, ya = pts[i]
        xb, yb = pts[(i + 1) % m]
        if (ya > y) != (yb > y) and x < (xb - xa) * (y - ya) / (yb - ya) + xa:
            inside = not inside
    return inside


def _spline_radii(center, pts: np.ndarray, n: int) -> np.ndarray | None:
    """Periodic-spline radii through the clicked points at n uniform angles.

    Interpolating rho(phi) through the clicks avoids the chord-sag kinks of
    straight polygon edges (a circle of clicks maps to a constant-rho
    contour).  Returns None when the clicks are not star convex about the
    center, in which case the caller falls back to ray casting.
    """
    d = pts - np.asarray(center)
    ang = np.mod(np.arctan2(d[:, 1], d[:, 0]), 2.0 * math.pi)
    order = np.argsort(ang)
    ang, rho = ang[order], np.hypot(d[:, 0], d[:, 1])[order]
    if np.min(np.diff(ang)) < 1e-9:
        return None
    knots = np.concatenate((ang, ang[:1] + 2.0 * math.pi))
    values = np.concatenate((rho, rho[:1]))
    spline = CubicSpline(knots, values, bc_type="periodic")
    phi = np.arange(n) * 2.0 * math.pi / n
    out = spline(np.where(phi >= ang[0], phi, phi + 2.0 * math.pi))
    if np.min(out) <= 0.0:
        return None
    return out


def _polygon_radii(center, pts: np.ndarray, n: int) -> np.ndarray:
    """Largest ray-polygon intersection distance at each of n uniform angles."""
    cx, cy = center
    m = pts.shape[0]
    radii = np.zeros(n)
    for j in range(n):
        a = 2.0 * math.pi * j / n
        dx, dy = math.cos(a), math.sin(a)
        best = 0.0
        for i in range(m):
            xa, ya = pts[i]
            xb, yb = pts[(i + 1) % m]
            ex, ey = xb - xa, yb - ya
            denom = dx * ey - dy * ex
            if abs(denom) < 1e-12:
                continue
            t = ((xa - cx) * ey - (ya - cy) * ex) / denom
            s = (dx * (ya - cy) - dy * (xa - cx)) / -denom
            if t >= 0.0 and 0.0 <= s < 1.0:
                best = max(best, t)
        radii[j] = best
    return radii


# -- weight adaptation glue ---------------------------------------------------

def _scalar_weights(params: AdPacParams) -> dict:
    return dict(alpha=params.alpha, beta=params.beta, gamma=params.gamma,
                kappa=params.kappa, zeta=params.zeta, nu=params.nu)


def _cap_outliers(w: np.ndarray, ratio: float) -> np.ndarray:
    """Clip isolated weight spikes to ratio * median.

    The reciprocal weight formulas blow up wherever their denominator bracket
    happens to vanish; an uncapped spike couples into the neighbouring rows of
    the banded gradient and destabilizes the descent.  Uniform weight vectors
    pass through unchanged.
    """
    return np.minimum(w, ratio * float(np.median(w)))


def _spatial_weights(frame: Frame, gradients: GradientField, contour: PolarContour,
                     search_radius: float, params: AdPacParams) -> dict:
    """Fresh per-point weight vectors from one segmented frame."""
    eps = params.epsilon
    rho = contour.radii
    stats = sector_stats(frame, contour, search_radius)
    cap = params.weight_cap
    return dict(alpha_n=_cap_outliers(adapt_alpha(rho, contour.phi0, eps), cap),
                beta_n=_cap_outliers(adapt_beta(rho, contour.phi0, eps), cap),
                gamma_n=_cap_outliers(adapt_gamma(gradients, contour, eps), cap),
                kappa_n=_cap_outliers(adapt_kappa(stats, rho, eps), cap),
                zeta_n=adapt_zeta(frame, contour))


def _resampled_vectors(weights: WeightSet, n_new: int) -> dict:
    return dict(alpha_n=resample_weights(weights.alpha_n, n_new),
                beta_n=resample_weights(weights.beta_n, n_new),
                gamma_n=resample_weights(weights.gamma_n, n_new),
                kappa_n=resample_weights(weights.kappa_n, n_new),
                zeta_n=resample_weights(weights.zeta_n, n_new))


# -- minimization -------------------------------------------------------------

def minimize(state: TrackerState, frame: Frame, gradients: GradientField,
             params: AdPacParams) -> MinimizeResult:
    """Run the descent to equilibrium or the iteration cap.

    On a non-finite gradient the frame is aborted and the incoming contour
    retained. If the contour outgrows the search disk the disk is enlarged
    (flagged) and the descent resumed.
    """
    contour = state.contour
    rho = contour.radii.copy()
    cx, cy = contour.center
    n = rho.size
    ang = contour.angles
    cos_t, sin_t = np.cos(ang), np.sin(ang)
    w = state.weights
    radius = max(state.search_radius, params.r_factor * rho.max())
    grew = 1 if radius > state.search_radius else 0
    frame_mean = frame.mean()
    total_iters = 0
    fallbacks = 0
    max_dr = math.inf
    status = _kernels.STATUS_MAX_ITERS
    while total_iters < params.max_iters:
        pix_val, pix_r, pix_sector, pix_k, pix_frac = sector_geometry(
            (cx, cy), radius, n, frame.data.shape, frame.data)
        iters, max_dr, status, fb = _kernels.run_descent(
            rho, radius, cx, cy, cos_t, sin_t, contour.phi0,
            frame.data, gradients.ix, gradients.iy, gradients.gx, gradients.gy,
            w.alpha_n, w.beta_n, w.gamma_n, w.kappa_n, w.zeta_n,
            np.asarray(state.ref_intensity, dtype=np.float64),
            w.alpha, w.beta, w.gamma, w.kappa, w.zeta,
            params.contraction_sign * w.nu,
            params.mu1, params.mu2, params.step_cap, params.tol,
            params.max_iters - total_iters, params.stats_refresh,
            pix_val, pix_r, pix_sector.astype(np.int64), pix_k.astype(np.int64),
            pix_frac, frame_mean)
        total_iters += iters
        fallbacks += fb
        if status == _kernels.STATUS_GROWN and total_iters < params.max_iters:
            radius = params.r_factor * rho.max()
            grew += 1
            continue
        break
    warnings = grew + (1 if fallbacks > 0 else 0)
    if status == _kernels.STATUS_NONFINITE:
        return MinimizeResult(contour=state.contour, iterations=total_iters,
                              max_dr=max_dr, converged=False, aborted=True,
                              warnings=warnings + 1)
    rho = np.maximum(rho, RADIUS_FLOOR)
    return MinimizeResult(contour=contour.with_radii(rho), iterations=total_iters,
                          max_dr=max_dr, converged=status == _kernels.STATUS_CONVERGED,
                          aborted=False, warnings=warnings)


# -- pipeline -----------------------------------------------------------------

def init_from_manual(points, frame: Frame, params: AdPacParams) -> tuple[TrackerState, FrameRecord]:
    """Build frame-1 state from a manual polygon.

    The polygon is converted to polar form about its centroid, the first
    weights are adapted from the polygon (no forgetting on frame 1), the
    contour is relaxed once, and reference intensities are taken from the
    relaxed result.  The shape weights (curvature, continuity) are adapted at
    the constant mean radius instead of the raw radii: their brackets are
    hypersensitive to the chord-sag kinks of a coarse manual polygon, and
    heterogeneous weights there pull the relaxed contour off the boundary.
    The image weights still sample at the drawn polygon.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise InitError(f"need at least 3 (x, y) points, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InitError("points must be finite")
    if not _is_simple_polygon(pts):
        raise InitError("polygon is self-intersecting or degenerate")
    centroid = pts.mean(axis=0)
    if not _point_in_polygon(centroid, pts):
        raise InitError("polygon centroid lies outside the polygon")
    closed = np.vstack((pts, pts[:1]))
    perim = float(np.linalg.norm(np.diff(closed, axis=0), axis=1).sum())
    n = update_point_count(perim, params.spacing)
    radii = _spline_radii(centroid, pts, n)
    if radii is None:
        radii = _polygon_radii(centroid, pts, n)
    radii = np.maximum(radii, RADIUS_FLOOR)
    contour = PolarContour((float(centroid[0]), float(centroid[1])), radii)

    gradients = compute_gradients(frame)
    cpts = contour.points()
    ref_i = sample_bilinear(frame.data, cpts[:, 0], cpts[:, 1])
    radius = params.r_factor * contour.max_radius()
    if params.spatial_adaptation:
        vectors = _spatial_weights(frame, gradients, contour, radius, params)
        weights = WeightSet(**vectors, **_scalar_weights(params))
    else:
        weights = WeightSet.uniform(n, **_scalar_weights(params))
    smooth_state = TrackerState(contour=contour, weights=weights, search_radius=radius,
                                ref_intensity=ref_i, frame=frame, gradients=gradients)
    result = minimize(smooth_state, frame, gradients, params)
    contour = result.contour
    radius = params.r_factor * contour.max_radius()
    cpts = contour.points()
    ref_i = sample_bilinear(frame.data, cpts[:, 0], cpts[:, 1])
    if params.spatial_adaptation:
        vectors = _spatial_weights(frame, gradients, contour, radius, params)
        weights = WeightSet(**vectors, **_scalar_weights(params))
    else:
        weights = WeightSet.uniform(contour.n_points, **_scalar_weights(params))
    state = TrackerState(contour=contour, weights=weights, search_radius=radius,
                         ref_intensity=ref_i, frame=frame, gradients=gradients,
                         frame_index=0, warnings=result.warnings)
    record = FrameRecord(frame_index=0, contour=contour, iterations=result.iterations,
                         max_dr=result.max_dr, warnings=result.warnings,
                         aborted=result.aborted)
    return state, record


def track_frame(state: TrackerState, frame: Frame, params: AdPacParams) -> tuple[TrackerState, FrameRecord]:
    """Advance the tracker by one frame.

    Order: point-count update, recenter/resample, weight adaptation with
    forgetting (all from the previous frame's data), descent on the new frame,
    then state carry-over. On abort the previous contour is carried forward.
    """
    idx = state.frame_index + 1
    n_new = update_point_count(perimeter(state.contour), params.spacing)
    resampled, resample_warnings = recenter_resample(state.contour, n_new)

    prev_vectors = _resampled_vectors(state.weights, n_new)
    radius = max(state.search_radius, params.r_factor * resampled.max_radius())
    if params.spatial_adaptation and params.temporal_adaptation:
        fresh = _spatial_weights(state.frame, state.gradients, resampled, radius, params)
        vectors = {k: apply_forgetting(params.xi, fresh[k], prev_vectors[k])
                   for k in fresh}
    elif params.spatial_adaptation:
        vectors = prev_vectors  # frozen frame-1 weights, re-interpolated to n_new
    else:
        ones = np.ones(n_new)
        vectors = {k: ones.copy() for k in prev_vectors}
    weights = WeightSet(**vectors, **_scalar_weights(params))

    rpts = resampled.points()
    ref_i = sample_bilinear(state.frame.data, rpts[:, 0], rpts[:, 1])

    gradients = compute_gradients(frame)
    work_state = TrackerState(contour=resampled, weights=weights, search_radius=radius,
                              ref_intensity=ref_i, frame=frame, gradients=gradients,
                              frame_index=idx)
    result = minimize(work_state, frame, gradients, params)
    contour = result.contour
    warnings = resample_warnings + result.warnings
    new_state = TrackerState(contour=contour, weights=weights,
                             search_radius=params.r_factor * contour.max_radius(),
                             ref_intensity=sample_bilinear(
                                 frame.data, *contour.points().T),
                             frame=frame, gradients=gradients,
                             frame_index=idx, warnings=state.warnings + warnings)
    record = FrameRecord(frame_index=idx, contour=contour, iterations=result.iterations,
                         max_dr=result.max_dr, warnings=warnings, aborted=result.aborted)
    return new_state, record


def track_video(frames, manual_points, params: AdPacParams) -> list[FrameRecord]:
    """Track a whole frame sequence; frame 1 comes from the manual polygon."""
    records: list[FrameRecord] = []
    state = None
    for i, frame in enumerate(frames):
        if i == 0:
            state, record = init_from_manual(manual_points, frame, params)
        else:
            state, record = track_frame(state, frame, params)
        records.append(record)
    if not records:
        raise ValueError("need at least one frame")
    return records
