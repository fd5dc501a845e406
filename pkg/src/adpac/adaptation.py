"""Spatial and temporal adaptation of the per-point energy weights."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contour import PolarContour
from .energy import SectorStats, variational_coupling
from .image import Frame, GradientField, sample_bilinear


@dataclass(frozen=True)
class AdaptationConfig:
    """Adaptation knobs: denominator guard, forgetting factor and ablation flags."""

    epsilon: float = 1e-4
    xi: float = 0.5
    spatial: bool = True
    temporal: bool = True

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 <= self.xi <= 1.0:
            raise ValueError("xi must be within [0, 1]")


def adapt_alpha(rho_prev: np.ndarray, phi0: float, epsilon: float) -> np.ndarray:
    """Curvature weights: reciprocal of the uniform-weight gradient magnitude."""
    rho = np.asarray(rho_prev, dtype=np.float64)
    c1, c2 = math.cos(phi0), math.cos(2.0 * phi0)
    bracket = (12.0 * rho - 8.0 * (np.roll(rho, 1) + np.roll(rho, -1)) * c1
               + 2.0 * (np.roll(rho, 2) + np.roll(rho, -2)) * c2)
    return 1.0 / (epsilon + np.abs(bracket))


def adapt_beta(rho_prev: np.ndarray, phi0: float, epsilon: float) -> np.ndarray:
    """Continuity weights: reciprocal of the uniform-weight gradient magnitude."""
    rho = np.asarray(rho_prev, dtype=np.float64)
    bracket = 4.0 * rho - 2.0 * (np.roll(rho, 1) + np.roll(rho, -1)) * math.cos(phi0)
    return 1.0 / (epsilon + np.abs(bracket))


def adapt_gamma(field: GradientField, contour_prev: PolarContour,
                epsilon: float) -> np.ndarray:
    """Edge weights: reciprocal radial derivative of |grad I|^2 on the previous frame."""
    pts = contour_prev.points()
    ang = contour_prev.angles
    gx = sample_bilinear(field.gx, pts[:, 0], pts[:, 1])
    gy = sample_bilinear(field.gy, pts[:, 0], pts[:, 1])
    return 1.0 / (epsilon + np.abs(gx * np.cos(ang) + gy * np.sin(ang)))


def adapt_kappa(stats_prev: SectorStats, rho_prev: np.ndarray,
                epsilon: float) -> np.ndarray:
    """Region weights: reciprocal gradient magnitude with unit coupling.

    The coupling is evaluated at kappa = 1 to break the circular dependence
    on the weights being solved for.
    """
    rho = np.asarray(rho_prev, dtype=np.float64)
    iota = variational_coupling(stats_prev, np.ones(rho.size))
    im1, ip1 = np.roll(iota, 1), np.roll(iota, -1)
    bracket = ((iota + im1) * np.roll(rho, 1) + 4.0 * iota * rho
               + (iota + ip1) * np.roll(rho, -1))
    return 1.0 / (epsilon + np.abs(bracket))


def adapt_zeta(frame_prev: Frame, contour_prev: PolarContour) -> np.ndarray:
    """Intensity weights: squared boundary intensity of the previous frame."""
    pts = contour_prev.points()
    vals = sample_bilinear(frame_prev.data, pts[:, 0], pts[:, 1])
    return np.abs(vals) ** 2


def apply_forgetting(xi: float, fresh: np.ndarray, prev: np.ndarray) -> np.ndarray:
    """Exponential blend xi*fresh + (1-xi)*prev; lengths must already match."""
    fresh = np.asarray(fresh, dtype=np.float64)
    prev = np.asarray(prev, dtype=np.float64)
    if fresh.shape != prev.shape:
        raise ValueError(f"weight length mismatch: {fresh.shape} vs {prev.shape}")
    return xi * fresh + (1.0 - xi) * prev


def resample_weights(values: np.ndarray, n_new: int) -> np.ndarray:
    """Periodic linear re-interpolation of a per-point weight vector to n_new entries."""
    values = np.asarray(values, dtype=np.float64)
    n_old = values.size
    if n_old == n_new:
        return values.copy()
    pos = np.arange(n_new) * (n_old / n_new)
    ext = np.concatenate((values, values[:1]))
    return np.interp(pos, np.arange(n_old + 1), ext)
