"""Polar contour representation, geometry, resampling and rasterization."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

MIN_POINTS = 4
RADIUS_FLOOR = 0.5  # px; keeps radii strictly positive after any update


class ContourError(ValueError):
    """Invalid contour construction or contract violation."""


@dataclass(frozen=True)
class PolarContour:
    """Closed star-convex contour: N radii sampled at uniform angles about a center.

    Angles are implicit (n * 2*pi/N) and never stored per point; all index
    arithmetic wraps mod N.
    """

    center: tuple[float, float]
    radii: np.ndarray

    def __post_init__(self):
        radii = np.ascontiguousarray(self.radii, dtype=np.float64)
        if radii.ndim != 1 or radii.size < MIN_POINTS:
            raise ContourError(f"need at least {MIN_POINTS} radii, got shape {radii.shape}")
        if not np.all(np.isfinite(radii)):
            raise ContourError("radii must be finite")
        if np.any(radii < 0):
            raise ContourError("radii must be non-negative")
        radii = radii.copy()
        radii.setflags(write=False)
        object.__setattr__(self, "radii", radii)
        cx, cy = float(self.center[0]), float(self.center[1])
        if not (math.isfinite(cx) and math.isfinite(cy)):
            raise ContourError("center must be finite")
        object.__setattr__(self, "center", (cx, cy))

    @property
    def n_points(self) -> int:
        return self.radii.size

    @property
    def phi0(self) -> float:
        return 2.0 * math.pi / self.radii.size

    @property
    def angles(self) -> np.ndarray:
        return np.arange(self.n_points) * self.phi0

    def to_cartesian(self, n: int) -> tuple[float, float]:
        """Cartesian coordinates of point n (index wrapped mod N)."""
        n = int(n) % self.n_points
        a = n * self.phi0
        return (self.center[0] + self.radii[n] * math.cos(a),
                self.center[1] + self.radii[n] * math.sin(a))

    def points(self) -> np.ndarray:
        """All contour points as an (N, 2) array of (x, y)."""
        a = self.angles
        return np.column_stack((self.center[0] + self.radii * np.cos(a),
                                self.center[1] + self.radii * np.sin(a)))

    def max_radius(self) -> float:
        return float(self.radii.max())

    def with_radii(self, radii: np.ndarray) -> "PolarContour":
        return PolarContour(self.center, radii)


def perimeter(c: PolarContour) -> float:
    """Closed-polygon perimeter: sum of Euclidean chord lengths."""
    pts = c.points()
    return float(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1).sum())


def polygon_area(c: PolarContour) -> float:
    """Shoelace area of the contour polygon."""
    pts = c.points()
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return float(abs(np.sum(x * yn - xn * y)) / 2.0)


def update_point_count(perim: float, spacing: float) -> int:
    """New point count: ceil(perimeter / spacing), clamped to >= MIN_POINTS."""
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    if perim <= 0:
        raise ValueError(f"perimeter must be positive, got {perim}")
    return max(MIN_POINTS, math.ceil(perim / spacing))


def sector_areas(c: PolarContour, search_radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-sector inner areas and their complements within the search disk.

    A_n = 1/4 sin(phi0/2) rho_n (rho_{n+1} + 2 rho_n + rho_{n-1});
    the complement is the rest of the half-sector wedge of radius R.
    """
    if search_radius < c.max_radius():
        raise ContourError(
            f"search radius {search_radius} smaller than max contour radius {c.max_radius()}")
    rho = c.radii
    inner = 0.25 * math.sin(c.phi0 / 2.0) * rho * (np.roll(rho, -1) + 2.0 * rho + np.roll(rho, 1))
    outer = 0.5 * c.phi0 * search_radius ** 2 - inner
    return inner, outer


def sector_area(c: PolarContour, n: int, search_radius: float) -> tuple[float, float]:
    """Inner/outer area pair for sector n."""
    inner, outer = sector_areas(c, search_radius)
    n = int(n) % c.n_points
    return float(inner[n]), float(outer[n])


def _ray_radii_from_curve(theta_walk: np.ndarray, r_walk: np.ndarray,
                          targets: np.ndarray) -> tuple[np.ndarray, int]:
    """Radius of the curve along each target ray angle.

    theta_walk is the unwrapped angle of a densely sampled closed curve
    (closure segment included); at non-unique intersections the largest
    radius wins and a warning is counted.
    """
    lo, hi = theta_walk.min(), theta_walk.max()
    t0, t1 = theta_walk[:-1], theta_walk[1:]
    r0, r1 = r_walk[:-1], r_walk[1:]
    radii = np.empty(targets.size)
    warnings = 0
    for j, ang in enumerate(targets):
        k_lo = math.floor((lo - ang) / (2.0 * math.pi))
        k_hi = math.ceil((hi - ang) / (2.0 * math.pi))
        found = []
        for k in range(k_lo, k_hi + 1):
            a = ang + 2.0 * math.pi * k
            if a < lo - 1e-12 or a > hi + 1e-12:
                continue
            cross = ((t0 - a) * (t1 - a) < 0) | (t0 == a)
            idx = np.nonzero(cross)[0]
            if idx.size == 0:
                continue
            denom = t1[idx] - t0[idx]
            frac = np.where(denom != 0, (a - t0[idx]) / np.where(denom == 0, 1.0, denom), 0.0)
            found.extend(r0[idx] + frac * (r1[idx] - r0[idx]))
        if not found:
            # Degenerate sampling gap: fall back to nearest walk sample.
            near = np.argmin(np.abs(((theta_walk - ang) + math.pi) % (2 * math.pi) - math.pi))
            found = [r_walk[near]]
        found = np.asarray(found)
        if found.size > 1 and found.max() - found.min() > 1e-6:
            warnings += 1
        radii[j] = found.max()
    return radii, warnings


def recenter_resample(c: PolarContour, n_new: int) -> tuple[PolarContour, int]:
    """Move the center by the mean contour-point offset and resample at n_new angles.

    The boundary is interpolated as a periodic cubic spline in Cartesian
    coordinates (chord-length parameterization) and re-intersected with rays
    from the new center, so the result stays correct when the center shifts.
    Returns (contour, warning_count); warnings count rays whose intersection
    with the curve was non-unique (largest radius taken).
    """
    if n_new < MIN_POINTS:
        raise ContourError(f"n_new must be >= {MIN_POINTS}, got {n_new}")
    ang = c.angles
    cx = c.center[0] + float(np.mean(c.radii * np.cos(ang)))
    cy = c.center[1] + float(np.mean(c.radii * np.sin(ang)))

    pts = c.points()
    closed = np.vstack((pts, pts[:1]))
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    t = np.concatenate(([0.0], np.cumsum(seg)))
    if t[-1] <= 0:
        raise ContourError("contour has zero perimeter")
    # CubicSpline periodic requires strictly increasing knots; merge dup points.
    keep = np.concatenate(([True], np.diff(t) > 0))
    keep[-1] = True
    t, closed = t[keep], closed[keep]
    if closed.shape[0] < 4:
        raise ContourError("too few distinct points to interpolate")
    sx = CubicSpline(t, closed[:, 0], bc_type="periodic")
    sy = CubicSpline(t, closed[:, 1], bc_type="periodic")

    dense_n = max(2048, 32 * max(c.n_points, n_new))
    td = np.linspace(0.0, t[-1], dense_n, endpoint=False)
    xd, yd = sx(td), sy(td)
    theta = np.arctan2(yd - cy, xd - cx)
    rad = np.hypot(xd - cx, yd - cy)
    # Unwrap along the curve, closure segment included.
    dth = np.diff(theta)
    dth = (dth + math.pi) % (2.0 * math.pi) - math.pi
    walk = theta[0] + np.concatenate(([0.0], np.cumsum(dth)))
    d_close = ((theta[0] - theta[-1]) + math.pi) % (2.0 * math.pi) - math.pi
    walk = np.concatenate((walk, [walk[-1] + d_close]))
    rad = np.concatenate((rad, [rad[0]]))
    if walk[-1] < walk[0]:  # clockwise orientation: reverse the walk
        walk, rad = walk[::-1], rad[::-1]

    targets = np.arange(n_new) * (2.0 * math.pi / n_new)
    radii, warnings = _ray_radii_from_curve(walk, rad, targets)
    radii = np.maximum(radii, RADIUS_FLOOR)
    return PolarContour((cx, cy), radii), warnings


def rasterize(c: PolarContour, width: int, height: int) -> np.ndarray:
    """Binary mask of pixels whose centers fall inside the contour polygon.

    Even-odd rule on pixel centers at integer coordinates; mask indexed
    [y, x]. Deterministic and idempotent.
    """
    if width <= 0 or height <= 0:
        raise ValueError(f"image size must be positive, got {width}x{height}")
    mask = np.zeros((height, width), dtype=bool)
    pts = c.points()
    x_lo = max(0, math.floor(pts[:, 0].min()))
    x_hi = min(width - 1, math.ceil(pts[:, 0].max()))
    y_lo = max(0, math.floor(pts[:, 1].min()))
    y_hi = min(height - 1, math.ceil(pts[:, 1].max()))
    if x_lo > x_hi or y_lo > y_hi:
        return mask
    xs = np.arange(x_lo, x_hi + 1, dtype=np.float64)
    ys = np.arange(y_lo, y_hi + 1, dtype=np.float64)
    gx, gy = np.meshgrid(xs, ys)
    inside = np.zeros(gx.shape, dtype=bool)
    nxt = np.roll(pts, -1, axis=0)
    for (xa, ya), (xb, yb) in zip(pts, nxt):
        if ya == yb:
            continue
        cond = (ya > gy) != (yb > gy)
        x_int = (xb - xa) * (gy - ya) / (yb - ya) + xa
        inside ^= cond & (gx < x_int)
    mask[y_lo:y_hi + 1, x_lo:x_hi + 1] = inside
    return mask


def to_json_line(c: PolarContour, frame: int) -> str:
    """One JSON-lines record: {"frame": k, "center": [x, y], "radii": [...]}."""
    return json.dumps({"frame": int(frame),
                       "center": [c.center[0], c.center[1]],
                       "radii": c.radii.tolist()})


def from_json_line(line: str) -> tuple[int, PolarContour]:
    rec = json.loads(line)
    return int(rec["frame"]), PolarContour((rec["center"][0], rec["center"][1]),
                                           np.asarray(rec["radii"], dtype=np.float64))
