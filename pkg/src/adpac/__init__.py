"""Adaptive polar active contour segmentation and tracking toolkit."""

from .adaptation import (AdaptationConfig, adapt_alpha, adapt_beta, adapt_gamma,
                         adapt_kappa, adapt_zeta, apply_forgetting, resample_weights)
from .baseline import (ClassicPolarParams, classic_energy, classic_minimize,
                       classic_track_video, de2014_curvature_energy, make_ablation)
from .contour import (ContourError, PolarContour, from_json_line, perimeter,
                      polygon_area, rasterize, recenter_resample, sector_area,
                      sector_areas, to_json_line, update_point_count)
from .energy import (SectorStats, StepParams, WeightSet, continuity_energy,
                     continuity_gradient, curvature_energy, curvature_gradient,
                     edge_gradient, gd_step, intensity_gradient, sector_stats,
                     total_gradient, variational_gradient)
from .image import (Frame, FormatError, GradientField, compute_gradients,
                    load_frame, sample_bilinear)
from .metrics import SegMetrics, aggregate, confusion
from .phantom import PhantomSpec, generate, preset, true_contour, write_dataset
from .tracker import (AdPacParams, FrameRecord, InitError, MinimizeResult,
                      TrackerState, init_from_manual, minimize, track_frame,
                      track_video)

__all__ = [name for name in dir() if not name.startswith("_")]
