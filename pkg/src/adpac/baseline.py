"""Comparison algorithms: classic polar snake and the adaptation ablations."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import hilbert

from .contour import RADIUS_FLOOR, PolarContour, recenter_resample
from .image import Frame, sample_bilinear
from .tracker import AdPacParams, FrameRecord, InitError, _polygon_radii, \
    _is_simple_polygon, _point_in_polygon
from .contour import update_point_count

ABLATION_VARIANTS = ("no-adaptation", "no-temporal")


@dataclass(frozen=True)
class ClassicPolarParams:
    """Classic polar snake constants and discrete-search controls."""

    # stiffness is per squared px of radius change while the external term
    # spans [0, gamma]; small alpha/beta keep the edge attraction dominant
    alpha: float = 0.01
    beta: float = 0.01
    gamma: float = 1.0
    search_halfwidth: float = 5.0  # px
    ray_samples: int = 128
    r_factor: float = 1.5
    max_sweeps: int = 200

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("energy constants must be non-negative")
        if self.search_halfwidth < 0 or self.ray_samples < 8:
            raise ValueError("invalid search controls")


def make_ablation(variant: str, params: AdPacParams) -> AdPacParams:
    """Tracker configuration for one ablation variant.

    no-adaptation freezes uniform per-point weights for all frames;
    no-temporal adapts spatially on frame 1 only, then freezes.
    """
    if variant == "no-adaptation":
        return replace(params, spatial_adaptation=False, temporal_adaptation=False)
    if variant == "no-temporal":
        return replace(params, spatial_adaptation=True, temporal_adaptation=False)
    raise ValueError(f"unknown ablation variant {variant!r}; expected one of {ABLATION_VARIANTS}")


def de2014_curvature_energy(radii: np.ndarray) -> float:
    """Second-difference curvature energy of the classic polar snake.

    Exactly zero for any constant-radius contour, which is why the adaptive
    energy replaces it with the Cartesian second difference.
    """
    r = np.asarray(radii, dtype=np.float64)
    return float(np.sum((r - 2.0 * np.roll(r, -1) + np.roll(r, -2)) ** 2))


def ray_profiles(frame: Frame, center: tuple[float, float], search_radius: float,
                 n_angles: int, n_samples: int) -> np.ndarray:
    """Bilinear intensity profiles along each ray from the center to R."""
    cx, cy = center
    s = np.linspace(0.0, search_radius, n_samples)
    ang = np.arange(n_angles) * (2.0 * math.pi / n_angles)
    xs = cx + np.outer(np.cos(ang), s)
    ys = cy + np.outer(np.sin(ang), s)
    return sample_bilinear(frame.data, xs, ys)


def hilbert_magnitude(profiles: np.ndarray) -> np.ndarray:
    """|Hilbert transform| of each ray profile, padded to a power of two."""
    n = profiles.shape[-1]
    padded = 1 << (n - 1).bit_length()
    analytic = hilbert(profiles, N=padded, axis=-1)
    return np.abs(analytic.imag[..., :n])


def _external_terms(profiles: np.ndarray, gamma: float) -> np.ndarray:
    """gamma * (1 - |f_hat| / max|f_hat|) per ray sample; featureless rays give gamma."""
    mag = hilbert_magnitude(profiles)
    peak = mag.max(axis=-1, keepdims=True)
    ext = np.where(peak < 1e-9, gamma, gamma * (1.0 - mag / np.maximum(peak, 1e-30)))
    return ext


def classic_energy(radii: np.ndarray, profiles: np.ndarray, search_radius: float,
                   p: ClassicPolarParams) -> float:
    """Total classic snake energy of polar radii against per-angle ray profiles."""
    r = np.asarray(radii, dtype=np.float64)
    ext = _external_terms(profiles, p.gamma)
    pos = r / search_radius * (profiles.shape[-1] - 1)
    idx = np.arange(r.size)
    e_ext = float(np.sum(_interp_rows(ext, idx, pos)))
    e_curv = p.alpha * de2014_curvature_energy(r)
    e_cont = p.beta * float(np.sum((r - np.roll(r, -1)) ** 2))
    return e_curv + e_cont + e_ext


def _interp_rows(table: np.ndarray, rows, pos):
    """Linear interpolation of table[row] at fractional column positions."""
    n = table.shape[-1]
    pos = np.clip(np.asarray(pos, dtype=np.float64), 0.0, n - 1.0)
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, n - 1)
    frac = pos - lo
    return table[rows, lo] * (1.0 - frac) + table[rows, hi] * frac


def classic_minimize(frame: Frame, init: PolarContour,
                     p: ClassicPolarParams) -> tuple[PolarContour, list[float]]:
    """Greedy per-angle windowed search; returns the contour and per-sweep energies.

    Each radius takes the window value minimizing total energy with neighbors
    fixed, so the energy is non-increasing sweep over sweep.
    """
    n = init.n_points
    radius = max(p.r_factor * init.max_radius(), 1.0)
    profiles = ray_profiles(frame, init.center, radius, n, p.ray_samples)
    ext = _external_terms(profiles, p.gamma)
    step = radius / (p.ray_samples - 1)
    idx = np.clip(np.round(init.radii / step).astype(int), 1, p.ray_samples - 1)
    window = int(round(p.search_halfwidth / step))

    def local_energy(i: int, s: int, idx_arr) -> float:
        r = idx_arr.astype(np.float64) * step
        r[i] = s * step
        e = ext[i, s]
        for t in (i, (i - 1) % n, (i - 2) % n):
            e += p.alpha * (r[t] - 2.0 * r[(t + 1) % n] + r[(t + 2) % n]) ** 2
        for t in (i, (i - 1) % n):
            e += p.beta * (r[t] - r[(t + 1) % n]) ** 2
        return e

    energies = [classic_energy(idx * step, profiles, radius, p)]
    for _ in range(p.max_sweeps):
        changed = False
        for i in range(n):
            lo = max(1, idx[i] - window)
            hi = min(p.ray_samples - 1, idx[i] + window)
            best_s, best_e = idx[i], local_energy(i, idx[i], idx)
            for s in range(lo, hi + 1):
                e = local_energy(i, s, idx)
                if e < best_e - 1e-12:
                    best_s, best_e = s, e
            if best_s != idx[i]:
                idx[i] = best_s
                changed = True
        energies.append(classic_energy(idx * step, profiles, radius, p))
        if not changed:
            break
    radii = np.maximum(idx * step, RADIUS_FLOOR)
    return init.with_radii(radii), energies


def classic_track_video(frames, manual_points, p: ClassicPolarParams,
                        spacing: float = 10.0) -> list[FrameRecord]:
    """Track a frame sequence with the classic polar snake.

    The point count is fixed from the initial polygon; each frame recenters
    on the polar centroid offset before the greedy search.
    """
    pts = np.asarray(manual_points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise InitError(f"need at least 3 (x, y) points, got shape {pts.shape}")
    if not _is_simple_polygon(pts):
        raise InitError("polygon is self-intersecting or degenerate")
    centroid = pts.mean(axis=0)
    if not _point_in_polygon(centroid, pts):
        raise InitError("polygon centroid lies outside the polygon")
    closed = np.vstack((pts, pts[:1]))
    perim = float(np.linalg.norm(np.diff(closed, axis=0), axis=1).sum())
    n = update_point_count(perim, spacing)
    radii = np.maximum(_polygon_radii(centroid, pts, n), RADIUS_FLOOR)
    contour = PolarContour((float(centroid[0]), float(centroid[1])), radii)

    records: list[FrameRecord] = []
    for i, frame in enumerate(frames):
        if i > 0:
            contour, _ = recenter_resample(contour, n)
        contour, energies = classic_minimize(frame, contour, p)
        records.append(FrameRecord(frame_index=i, contour=contour,
                                   iterations=len(energies) - 1, max_dr=0.0,
                                   warnings=0, aborted=False))
    if not records:
        raise ValueError("need at least one frame")
    return records
