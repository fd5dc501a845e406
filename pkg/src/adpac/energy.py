"""Energy terms in polar coordinates, their gradients, and one descent step."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contour import RADIUS_FLOOR, ContourError, PolarContour, sector_areas
from .image import Frame, GradientField, sample_bilinear

AREA_GUARD = 1e-6  # px^2; below this a sector's variational coupling is zeroed


@dataclass(frozen=True)
class WeightSet:
    """Per-point energy weights plus the global term multipliers."""

    alpha_n: np.ndarray
    beta_n: np.ndarray
    gamma_n: np.ndarray
    kappa_n: np.ndarray
    zeta_n: np.ndarray
    alpha: float = 1.0
    beta: float = 0.0
    gamma: float = 0.05
    kappa: float = 0.8
    zeta: float = 150.0
    nu: float = 0.0012

    def __post_init__(self):
        n = None
        for name in ("alpha_n", "beta_n", "gamma_n", "kappa_n", "zeta_n"):
            vec = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if n is None:
                n = vec.size
            if vec.ndim != 1 or vec.size != n:
                raise ValueError(f"{name} must be a length-{n} vector")
            if not np.all(np.isfinite(vec)) or np.any(vec < 0):
                raise ValueError(f"{name} entries must be finite and >= 0")
            object.__setattr__(self, name, vec)
        for name in ("alpha", "beta", "gamma", "kappa", "zeta", "nu"):
            val = float(getattr(self, name))
            if not math.isfinite(val) or val < 0:
                raise ValueError(f"{name} must be finite and >= 0")
            object.__setattr__(self, name, val)

    @property
    def n_points(self) -> int:
        return self.alpha_n.size

    @staticmethod
    def uniform(n: int, **scalars) -> "WeightSet":
        ones = np.ones(n)
        return WeightSet(ones, ones.copy(), ones.copy(), ones.copy(), ones.copy(), **scalars)


@dataclass(frozen=True)
class SectorStats:
    """Per-sector mean intensities inside/outside the contour plus geometry."""

    u: np.ndarray                # mean intensity inside each sector
    v: np.ndarray                # mean intensity in the (boundary, R] shell
    area_in: np.ndarray
    area_out: np.ndarray
    point_intensity: np.ndarray  # bilinear intensity at each contour point
    fallback_count: int = 0      # sectors whose mean fell back to the frame mean


@dataclass(frozen=True)
class StepParams:
    """Gradient-descent step sizes for the Hadamard update rule."""

    mu1: float = 1e-4
    mu2: float = 1.0
    step_cap: float = 0.2  # max per-point radius change per iteration, px

    def __post_init__(self):
        if self.mu1 <= 0 or self.mu2 < 0:
            raise ValueError("require mu1 > 0 and mu2 >= 0")
        if self.step_cap <= 0:
            raise ValueError("step_cap must be positive")


def curvature_energy(c: PolarContour, alpha_n: np.ndarray) -> float:
    """Weighted polar curvature energy (Cartesian second differences)."""
    rho = c.radii
    c1, c2 = math.cos(c.phi0), math.cos(2.0 * c.phi0)
    rm1, rp1 = np.roll(rho, 1), np.roll(rho, -1)
    terms = (4.0 * rho ** 2 + rm1 ** 2 + rp1 ** 2
             - 4.0 * rho * (rm1 + rp1) * c1 + 2.0 * rm1 * rp1 * c2)
    return float(np.sum(np.asarray(alpha_n) * terms))


def curvature_gradient(c: PolarContour, alpha_n: np.ndarray) -> np.ndarray:
    """Analytic derivative of curvature_energy: penta-banded circulant product."""
    rho = c.radii
    a = np.asarray(alpha_n, dtype=np.float64)
    c1, c2 = math.cos(c.phi0), math.cos(2.0 * c.phi0)
    am1, ap1 = np.roll(a, 1), np.roll(a, -1)
    rm1, rp1 = np.roll(rho, 1), np.roll(rho, -1)
    rm2, rp2 = np.roll(rho, 2), np.roll(rho, -2)
    return ((8.0 * a + 2.0 * am1 + 2.0 * ap1) * rho
            - 4.0 * (a + am1) * c1 * rm1
            - 4.0 * (a + ap1) * c1 * rp1
            + 2.0 * am1 * c2 * rm2
            + 2.0 * ap1 * c2 * rp2)


def continuity_energy(c: PolarContour, beta_n: np.ndarray) -> float:
    """Weighted polar continuity energy (Cartesian chord lengths squared)."""
    rho = c.radii
    rp1 = np.roll(rho, -1)
    terms = rho ** 2 - 2.0 * rho * rp1 * math.cos(c.phi0) + rp1 ** 2
    return float(np.sum(np.asarray(beta_n) * terms))


def continuity_gradient(c: PolarContour, beta_n: np.ndarray) -> np.ndarray:
    """Analytic derivative of continuity_energy: tri-banded circulant product."""
    rho = c.radii
    b = np.asarray(beta_n, dtype=np.float64)
    c1 = math.cos(c.phi0)
    bm1 = np.roll(b, 1)
    rm1, rp1 = np.roll(rho, 1), np.roll(rho, -1)
    return 2.0 * (b + bm1) * rho - 2.0 * bm1 * c1 * rm1 - 2.0 * b * c1 * rp1


def edge_gradient(c: PolarContour, field: GradientField, gamma_n: np.ndarray) -> np.ndarray:
    """Radial derivative of the edge energy, sampled bilinearly at the contour points."""
    pts = c.points()
    ang = c.angles
    gx = sample_bilinear(field.gx, pts[:, 0], pts[:, 1])
    gy = sample_bilinear(field.gy, pts[:, 0], pts[:, 1])
    return -np.asarray(gamma_n) * (gx * np.cos(ang) + gy * np.sin(ang))


def sector_geometry(center: tuple[float, float], search_radius: float,
                    n_sectors: int, shape: tuple[int, int],
                    data: np.ndarray) -> tuple[np.ndarray, ...]:
    """Flat per-pixel geometry for every pixel within the search disk.

    Returns (value, distance, sector index, boundary interpolation index,
    boundary interpolation fraction); reusable while the center is fixed.
    """
    h, w = shape
    cx, cy = center
    phi0 = 2.0 * math.pi / n_sectors
    x_lo = max(0, math.floor(cx - search_radius))
    x_hi = min(w - 1, math.ceil(cx + search_radius))
    y_lo = max(0, math.floor(cy - search_radius))
    y_hi = min(h - 1, math.ceil(cy + search_radius))
    if x_lo > x_hi or y_lo > y_hi:
        empty = np.empty(0)
        return empty, empty, empty.astype(np.intp), empty.astype(np.intp), empty
    xs = np.arange(x_lo, x_hi + 1, dtype=np.float64)
    ys = np.arange(y_lo, y_hi + 1, dtype=np.float64)
    gx, gy = np.meshgrid(xs, ys)
    dx, dy = gx - cx, gy - cy
    rr = np.hypot(dx, dy)
    sel = rr <= search_radius
    theta = np.mod(np.arctan2(dy[sel], dx[sel]), 2.0 * math.pi)
    t = theta / phi0
    sector = np.floor(t + 0.5).astype(np.intp) % n_sectors
    k = np.floor(t).astype(np.intp) % n_sectors
    frac = t - np.floor(t)
    values = data[y_lo:y_hi + 1, x_lo:x_hi + 1][sel]
    return (np.ascontiguousarray(values), np.ascontiguousarray(rr[sel]),
            np.ascontiguousarray(sector), np.ascontiguousarray(k),
            np.ascontiguousarray(frac))


def sector_stats(frame: Frame, c: PolarContour, search_radius: float) -> SectorStats:
    """Mean intensities inside/outside each angular sector of the search disk.

    A pixel belongs to the inside set when its radial distance does not exceed
    the contour boundary, interpolated linearly in angle between adjacent
    contour radii; empty regions fall back to the global frame mean (flagged).
    """
    if search_radius < c.max_radius():
        raise ContourError(
            f"search radius {search_radius} smaller than max contour radius {c.max_radius()}")
    n = c.n_points
    values, rr, sector, k, frac = sector_geometry(
        c.center, search_radius, n, frame.data.shape, frame.data)
    rho = c.radii
    boundary = rho[k] * (1.0 - frac) + rho[(k + 1) % n] * frac
    inside = rr <= boundary
    sum_in = np.bincount(sector[inside], weights=values[inside], minlength=n)
    cnt_in = np.bincount(sector[inside], minlength=n)
    sum_out = np.bincount(sector[~inside], weights=values[~inside], minlength=n)
    cnt_out = np.bincount(sector[~inside], minlength=n)
    mean = frame.mean()
    fallback = int(np.sum(cnt_in == 0) + np.sum(cnt_out == 0))
    u = np.where(cnt_in > 0, sum_in / np.maximum(cnt_in, 1), mean)
    v = np.where(cnt_out > 0, sum_out / np.maximum(cnt_out, 1), mean)
    area_in, area_out = sector_areas(c, search_radius)
    pts = c.points()
    point_i = sample_bilinear(frame.data, pts[:, 0], pts[:, 1])
    return SectorStats(u=u, v=v, area_in=area_in, area_out=area_out,
                       point_intensity=point_i, fallback_count=fallback)


def variational_coupling(stats: SectorStats, kappa_n: np.ndarray) -> np.ndarray:
    """Per-sector coupling of the region-statistics energy gradient.

    Derivative of -kappa_n (u_n - v_n)^2 under the two-triangle area model,
    with a singularity guard on vanishing areas.
    """
    kap = np.asarray(kappa_n, dtype=np.float64)
    u, v = stats.u, stats.v
    a_in, a_out = stats.area_in, stats.area_out
    point_i = stats.point_intensity
    guard = (a_in > AREA_GUARD) & (a_out > AREA_GUARD)
    sin_half = math.sin(math.pi / u.size)  # sin(phi0/2)
    with np.errstate(divide="ignore", invalid="ignore"):
        bracket = (point_i - u) / a_in + (point_i - v) / a_out
    return np.where(guard, -0.5 * kap * sin_half * (u - v) * bracket, 0.0)


def variational_gradient(stats: SectorStats, c: PolarContour,
                         kappa_n: np.ndarray) -> np.ndarray:
    """Tri-banded product assembling the region-statistics gradient."""
    iota = variational_coupling(stats, kappa_n)
    rho = c.radii
    im1, ip1 = np.roll(iota, 1), np.roll(iota, -1)
    return ((iota + im1) * np.roll(rho, 1) + 4.0 * iota * rho
            + (iota + ip1) * np.roll(rho, -1))


def intensity_gradient(frame: Frame, field: GradientField, c: PolarContour,
                       zeta_n: np.ndarray, ref_intensity: np.ndarray) -> np.ndarray:
    """Radial derivative of the boundary-intensity tracking penalty."""
    pts = c.points()
    ang = c.angles
    i_here = sample_bilinear(frame.data, pts[:, 0], pts[:, 1])
    ix = sample_bilinear(field.ix, pts[:, 0], pts[:, 1])
    iy = sample_bilinear(field.iy, pts[:, 0], pts[:, 1])
    return (np.asarray(zeta_n) * (i_here - np.asarray(ref_intensity))
            * (ix * np.cos(ang) + iy * np.sin(ang)))


def total_gradient(c: PolarContour, frame: Frame, field: GradientField,
                   stats: SectorStats, w: WeightSet, ref_intensity: np.ndarray,
                   contraction_sign: int = 1) -> np.ndarray:
    """Weighted sum of all term gradients plus the constant contraction force."""
    grad = w.alpha * curvature_gradient(c, w.alpha_n)
    grad = grad + w.beta * continuity_gradient(c, w.beta_n)
    grad = grad + w.kappa * variational_gradient(stats, c, w.kappa_n)
    grad = grad + w.gamma * edge_gradient(c, field, w.gamma_n)
    grad = grad + w.zeta * intensity_gradient(frame, field, c, w.zeta_n, ref_intensity)
    return grad + contraction_sign * w.nu


def gd_step(rho: np.ndarray, grad: np.ndarray, step: StepParams) -> np.ndarray:
    """One Hadamard descent step with the radius floor applied."""
    rho = np.asarray(rho, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if rho.shape != grad.shape:
        raise ValueError("rho and grad must have equal length")
    move = np.clip(step.mu1 * (1.0 + step.mu2 * rho) * grad,
                   -step.step_cap, step.step_cap)
    return np.maximum(rho - move, RADIUS_FLOOR)
