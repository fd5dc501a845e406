"""Procedural vessel-like test videos with exact ground truth."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter

from .contour import PolarContour, rasterize, to_json_line

TRUTH_POINTS = 256  # polygon resolution of the ground-truth contour
SPECKLE_SHAPE = 4.0  # gamma shape of the multiplicative speckle surrogate


@dataclass(frozen=True)
class PhantomSpec:
    """Scene description for one synthetic vessel video."""

    width: int = 380
    height: int = 365
    center: tuple[float, float] = (190.0, 182.0)
    base_radius: float = 45.0
    ellipse_ratio: float = 1.0                  # minor/major axis ratio
    harmonics: tuple[tuple[int, float, float], ...] = ()  # (m, a_m, psi_m)
    osc_amplitude: float = 0.0                  # radius oscillation fraction
    osc_period: float = 60.0                    # frames
    lumen: float = 0.08
    wall: float = 0.85
    background: float = 0.45
    wall_thickness: float = 6.0
    noise: float = 0.05                         # speckle strength
    shadow: tuple[float, float, float] | None = None  # (center angle, width, attenuation)
    drift: tuple[float, float] = (0.0, 0.0)     # px/frame
    blur_sigma: float = 1.5
    seed: int = 0

    def __post_init__(self):
        for name in ("lumen", "wall", "background"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} intensity must be within [0, 1], got {v}")
        if not 0.0 <= self.osc_amplitude < 1.0:
            raise ValueError("oscillation amplitude must be within [0, 1)")
        if self.osc_period <= 0:
            raise ValueError("oscillation period must be positive")
        if self.base_radius <= 0 or not 0 < self.ellipse_ratio <= 1.0:
            raise ValueError("invalid shape parameters")
        theta = np.linspace(0.0, 2.0 * math.pi, 720, endpoint=False)
        if np.min(self._shape_profile(theta)) * (1.0 - self.osc_amplitude) <= 0:
            raise ValueError("spec yields a non-star-convex (non-positive) radius")

    def _shape_profile(self, theta: np.ndarray) -> np.ndarray:
        e = self.ellipse_ratio
        profile = e / np.sqrt(e * e * np.cos(theta) ** 2 + np.sin(theta) ** 2)
        for m, a_m, psi_m in self.harmonics:
            profile = profile * (1.0 + a_m * np.cos(m * theta + psi_m))
        return self.base_radius * profile

    def radius_at(self, theta: np.ndarray, frame_index: int) -> np.ndarray:
        scale = 1.0 + self.osc_amplitude * math.sin(
            2.0 * math.pi * frame_index / self.osc_period)
        return scale * self._shape_profile(np.asarray(theta, dtype=np.float64))

    def center_at(self, frame_index: int) -> tuple[float, float]:
        return (self.center[0] + self.drift[0] * frame_index,
                self.center[1] + self.drift[1] * frame_index)


def true_contour(spec: PhantomSpec, frame_index: int,
                 n_points: int = TRUTH_POINTS) -> PolarContour:
    """Analytic ground-truth contour sampled as a polar polygon."""
    theta = np.arange(n_points) * (2.0 * math.pi / n_points)
    return PolarContour(spec.center_at(frame_index), spec.radius_at(theta, frame_index))


def generate_frame(spec: PhantomSpec, frame_index: int) -> np.ndarray:
    """One frame as a float array in [0, 1]; pure in (spec, frame_index)."""
    ys, xs = np.mgrid[0:spec.height, 0:spec.width].astype(np.float64)
    cx, cy = spec.center_at(frame_index)
    dx, dy = xs - cx, ys - cy
    rr = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    boundary = spec.radius_at(theta, frame_index)
    img = np.where(rr <= boundary, spec.lumen,
                   np.where(rr <= boundary + spec.wall_thickness,
                            spec.wall, spec.background))
    if spec.shadow is not None:
        angle, width, attenuation = spec.shadow
        delta = np.abs(((theta - angle) + math.pi) % (2.0 * math.pi) - math.pi)
        img = np.where(delta <= width / 2.0, img * attenuation, img)
    if spec.blur_sigma > 0:
        img = gaussian_filter(img, spec.blur_sigma, mode="nearest")
    if spec.noise > 0:
        rng = np.random.default_rng([spec.seed, frame_index])
        speckle = rng.gamma(SPECKLE_SHAPE, 1.0 / SPECKLE_SHAPE, size=img.shape)
        img = img * (1.0 + spec.noise * (speckle - 1.0) * SPECKLE_SHAPE ** 0.5)
    return np.clip(img, 0.0, 1.0)


def generate(spec: PhantomSpec, n_frames: int):
    """Yield (frame array, ground-truth mask, true contour) per frame."""
    if n_frames < 1:
        raise ValueError("need at least one frame")
    for k in range(n_frames):
        contour = true_contour(spec, k)
        mask = rasterize(contour, spec.width, spec.height)
        yield generate_frame(spec, k), mask, contour


PRESETS = {
    "good-oval": PhantomSpec(base_radius=48.0, ellipse_ratio=0.8,
                             osc_amplitude=0.05, osc_period=60.0, noise=0.05),
    "average-apices": PhantomSpec(base_radius=45.0, ellipse_ratio=0.85,
                                  harmonics=((3, 0.12, 0.7), (2, 0.08, 2.1)),
                                  osc_amplitude=0.08, osc_period=50.0, noise=0.10),
    "poor-shadow": PhantomSpec(base_radius=45.0, ellipse_ratio=0.8,
                               osc_amplitude=0.05, osc_period=60.0, noise=0.12,
                               shadow=(math.pi / 3.0, math.pi / 3.0, 0.1)),
    "high-variation": PhantomSpec(base_radius=33.0, ellipse_ratio=0.85,
                                  osc_amplitude=0.45, osc_period=120.0, noise=0.05),
}


def preset(name: str) -> PhantomSpec:
    """Documented fixed spec per preset name."""
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}") from None


def _save_pgm(path: Path, values: np.ndarray) -> None:
    Image.fromarray(np.round(values * 255.0).astype(np.uint8), mode="L").save(path)


def write_dataset(spec: PhantomSpec, n_frames: int, out_dir: str | Path,
                  init_points: int = 24) -> None:
    """Write frames, masks, truth contours, an init polygon and a manifest."""
    out = Path(out_dir)
    frames_dir = out / "frames"
    masks_dir = out / "masks"
    frames_dir.mkdir(parents=True, exist_ok=True)
    masks_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for k, (img, mask, contour) in enumerate(generate(spec, n_frames)):
        name = f"{k + 1:06d}.pgm"
        _save_pgm(frames_dir / name, img)
        _save_pgm(masks_dir / name, mask.astype(np.float64))
        lines.append(to_json_line(contour, k))
    (out / "truth.jsonl").write_text("\n".join(lines) + "\n")
    init = true_contour(spec, 0, n_points=init_points)
    pts = init.points()
    (out / "init.json").write_text(
        '{"points": [' + ", ".join(f"[{float(x)!r}, {float(y)!r}]" for x, y in pts)
        + "]}\n")
    manifest = {
        "width": spec.width, "height": spec.height,
        "center_x": spec.center[0], "center_y": spec.center[1],
        "base_radius": spec.base_radius, "ellipse_ratio": spec.ellipse_ratio,
        "harmonics": ";".join(f"{m}:{a}:{p}" for m, a, p in spec.harmonics),
        "osc_amplitude": spec.osc_amplitude, "osc_period": spec.osc_period,
        "lumen": spec.lumen, "wall": spec.wall, "background": spec.background,
        "wall_thickness": spec.wall_thickness, "noise": spec.noise,
        "shadow": "" if spec.shadow is None else
                  f"{spec.shadow[0]}:{spec.shadow[1]}:{spec.shadow[2]}",
        "drift_x": spec.drift[0], "drift_y": spec.drift[1],
        "blur_sigma": spec.blur_sigma, "seed": spec.seed, "n_frames": n_frames,
    }
    (out / "manifest.txt").write_text(
        "".join(f"{k}={v}\n" for k, v in manifest.items()))
