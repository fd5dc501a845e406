"""Confusion counts and segmentation scores between algorithm and reference masks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SegMetrics:
    """Pixel confusion counts and the derived overlap scores for one frame."""

    tp: int
    fp: int
    tn: int
    fn: int
    dice: float
    sensitivity: float
    specificity: float
    fpr: float


def confusion(algo_mask: np.ndarray, ref_mask: np.ndarray) -> SegMetrics:
    """Set-cardinality confusion counts plus dice/sensitivity/specificity/fpr.

    specificity is the standard TN/(FP+TN); fpr = FP/(FP+TN) is reported
    alongside. Dice over an empty union is defined as 1.
    """
    a = np.asarray(algo_mask, dtype=bool)
    m = np.asarray(ref_mask, dtype=bool)
    if a.shape != m.shape:
        raise ValueError(f"mask dimensions differ: {a.shape} vs {m.shape}")
    tp = int(np.sum(a & m))
    fp = int(np.sum(a & ~m))
    tn = int(np.sum(~a & ~m))
    fn = int(np.sum(~a & m))
    dice = 1.0 if (2 * tp + fp + fn) == 0 else 2.0 * tp / (2 * tp + fp + fn)
    sensitivity = 1.0 if (tp + fn) == 0 else tp / (tp + fn)
    specificity = 1.0 if (fp + tn) == 0 else tn / (fp + tn)
    fpr = 0.0 if (fp + tn) == 0 else fp / (fp + tn)
    return SegMetrics(tp=tp, fp=fp, tn=tn, fn=fn, dice=dice,
                      sensitivity=sensitivity, specificity=specificity, fpr=fpr)


def aggregate(per_frame: list[SegMetrics]) -> dict:
    """Per-video summary: mean, min and per-frame series of each score."""
    if not per_frame:
        raise ValueError("need at least one frame of metrics")
    out = {}
    for name in ("dice", "sensitivity", "specificity", "fpr"):
        series = [getattr(m, name) for m in per_frame]
        out[name] = {"mean": float(np.mean(series)),
                     "min": float(np.min(series)),
                     "series": series}
    return out
