"""Frame loading, intensity normalization, Sobel fields and bilinear sampling."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy.ndimage import correlate

MIN_DIM = 8

# Sobel kernels scaled by 1/8 so they approximate the true spatial derivative;
# x is the column axis, y the row axis.
SOBEL_X = np.array([[-1, 0, 1],
                    [-2, 0, 2],
                    [-1, 0, 1]], dtype=np.float64) / 8.0
SOBEL_Y = SOBEL_X.T.copy()


class FormatError(ValueError):
    """Unsupported or unreadable image input."""


@dataclass(frozen=True)
class Frame:
    """Grayscale raster with intensities normalized into [0, 1], indexed [y, x]."""

    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < MIN_DIM or data.shape[1] < MIN_DIM:
            raise FormatError(f"frame must be at least {MIN_DIM}x{MIN_DIM}, got {data.shape}")
        if not np.all(np.isfinite(data)) or data.min() < 0.0 or data.max() > 1.0:
            raise FormatError("intensities must be finite and within [0, 1]")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def mean(self) -> float:
        return float(self.data.mean())


@dataclass(frozen=True)
class GradientField:
    """Sobel derivatives of a frame and of its squared gradient magnitude."""

    ix: np.ndarray
    iy: np.ndarray
    gmag2: np.ndarray
    gx: np.ndarray
    gy: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.ix.shape


def load_frame(path: str | Path) -> Frame:
    """Load an 8-bit grayscale PGM or PNG and normalize to [0, 1]."""
    path = Path(path)
    try:
        img = Image.open(path)
        img.load()
    except (UnidentifiedImageError, OSError) as exc:
        raise FormatError(f"cannot read image file {path}: {exc}") from exc
    if img.mode != "L":
        raise FormatError(f"{path}: expected 8-bit grayscale, got mode {img.mode!r}")
    return Frame(np.asarray(img, dtype=np.float64) / 255.0)


def compute_gradients(frame: Frame) -> GradientField:
    """Sobel first derivatives, |grad I|^2 and its Sobel derivatives.

    Replicate (nearest) border padding avoids spurious edge responses
    at the frame boundary.
    """
    ix = correlate(frame.data, SOBEL_X, mode="nearest")
    iy = correlate(frame.data, SOBEL_Y, mode="nearest")
    gmag2 = ix * ix + iy * iy
    gx = correlate(gmag2, SOBEL_X, mode="nearest")
    gy = correlate(gmag2, SOBEL_Y, mode="nearest")
    return GradientField(ix=ix, iy=iy, gmag2=gmag2, gx=gx, gy=gy)


def sample_bilinear(field: np.ndarray, x, y):
    """Bilinear interpolation at (x, y); out-of-bounds coordinates clamp to the border."""
    h, w = field.shape
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, w - 1.0)
    y = np.clip(np.asarray(y, dtype=np.float64), 0.0, h - 1.0)
    x0 = np.floor(x).astype(np.intp)
    y0 = np.floor(y).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    top = field[y0, x0] * (1.0 - fx) + field[y0, x1] * fx
    bot = field[y1, x0] * (1.0 - fx) + field[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy
