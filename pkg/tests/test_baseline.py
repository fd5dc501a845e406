"""Classic polar snake and the adaptation ablations."""
import dataclasses
import math

import numpy as np
import pytest

from adpac.baseline import (ABLATION_VARIANTS, ClassicPolarParams, classic_energy,
                            classic_minimize, classic_track_video,
                            de2014_curvature_energy, hilbert_magnitude,
                            make_ablation, ray_profiles)
from adpac.contour import PolarContour
from adpac.energy import curvature_energy
from adpac.image import Frame
from adpac.tracker import AdPacParams, InitError, init_from_manual, track_frame


def disk_frame(size=128, r0=30.0, width=1.5, center=(64.0, 64.0)):
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    r = np.hypot(xx - center[0], yy - center[1])
    return Frame(0.1 + 0.8 * 0.5 * (1 + np.tanh((r - r0) / width)))


def circle_points(r, n=16, center=(64.0, 64.0)):
    ang = np.arange(n) * 2 * math.pi / n
    return np.stack([center[0] + r * np.cos(ang), center[1] + r * np.sin(ang)], axis=1)


class TestParams:
    def test_defaults_valid(self):
        ClassicPolarParams()

    def test_negative_constant_rejected(self):
        with pytest.raises(ValueError):
            ClassicPolarParams(alpha=-1.0)

    def test_bad_search_rejected(self):
        with pytest.raises(ValueError):
            ClassicPolarParams(ray_samples=4)


class TestCurvatureCritique:
    @pytest.mark.parametrize("rho", [1.0, 7.5, 30.0])
    def test_constant_radius_energy_exactly_zero(self, rho):
        assert de2014_curvature_energy(np.full(12, rho)) == 0.0

    def test_cartesian_energy_positive_on_circle(self):
        # the replacement energy penalizes the polygon curvature of a circle
        c = PolarContour((0.0, 0.0), np.full(12, 30.0))
        assert curvature_energy(c, np.ones(12)) > 0.0

    def test_nonconstant_radius_positive(self):
        assert de2014_curvature_energy(np.array([3.0, 4.0, 3.0, 4.0])) > 0.0


class TestHilbert:
    def test_constant_profile_zero_magnitude(self):
        mag = hilbert_magnitude(np.full((4, 128), 0.7))
        np.testing.assert_allclose(mag, 0.0, atol=1e-9)

    def test_cosine_profile_gives_abs_sine(self):
        # analytic signal of cos is cos + i sin on a full-period grid
        k = np.arange(128)
        for m in (2, 5):
            prof = np.cos(2 * math.pi * m * k / 128)
            np.testing.assert_allclose(hilbert_magnitude(prof[None, :]),
                                       np.abs(np.sin(2 * math.pi * m * k / 128))[None, :],
                                       atol=1e-6)


class TestClassicEnergy:
    def test_constant_everything_gives_gamma_per_angle(self):
        p = ClassicPolarParams(gamma=0.3)
        profiles = np.full((10, 128), 0.5)
        e = classic_energy(np.full(10, 20.0), profiles, 40.0, p)
        assert e == pytest.approx(10 * 0.3)

    def test_alpha_term_zero_for_constant_radius(self):
        p = ClassicPolarParams(alpha=5.0, beta=0.0, gamma=0.0)
        profiles = np.zeros((10, 128))
        assert classic_energy(np.full(10, 20.0), profiles, 40.0, p) == pytest.approx(0.0)

    def test_continuity_term(self):
        p = ClassicPolarParams(alpha=0.0, beta=2.0, gamma=0.0)
        profiles = np.zeros((4, 128))
        r = np.array([1.0, 2.0, 1.0, 2.0])
        assert classic_energy(r, profiles, 40.0, p) == pytest.approx(2.0 * 4.0)


class TestClassicMinimize:
    def test_energy_never_increases(self):
        frame = disk_frame()
        init = PolarContour((64.0, 64.0), np.full(24, 33.0))
        _, energies = classic_minimize(frame, init, ClassicPolarParams())
        assert all(b <= a + 1e-9 for a, b in zip(energies, energies[1:]))

    def test_disk_boundary_within_2px_rms(self):
        frame = disk_frame()
        init = PolarContour((64.0, 64.0), np.full(24, 33.0))
        out, _ = classic_minimize(frame, init, ClassicPolarParams())
        assert float(np.sqrt(np.mean((out.radii - 30.0) ** 2))) < 2.0

    def test_zero_window_leaves_contour_on_grid(self):
        frame = disk_frame()
        p = ClassicPolarParams(search_halfwidth=0.0)
        init = PolarContour((64.0, 64.0), np.full(24, 33.0))
        out, energies = classic_minimize(frame, init, p)
        step = p.r_factor * 33.0 / (p.ray_samples - 1)
        assert np.max(np.abs(out.radii - 33.0)) <= step / 2 + 1e-12
        assert len(energies) == 2  # first sweep changes nothing


class TestClassicTrackVideo:
    def test_static_disk_stays_on_boundary(self):
        frames = [disk_frame() for _ in range(3)]
        records = classic_track_video(frames, circle_points(33.0), ClassicPolarParams())
        assert len(records) == 3
        for rec in records:
            radii = np.hypot(*(rec.contour.points() - 64.0).T)
            assert float(np.sqrt(np.mean((radii - 30.0) ** 2))) < 2.0

    def test_bad_polygon_rejected(self):
        bow_tie = np.array([[0.0, 0.0], [10.0, 10.0], [10.0, 0.0], [0.0, 10.0]]) + 50
        with pytest.raises(InitError):
            classic_track_video([disk_frame()], bow_tie, ClassicPolarParams())

    def test_empty_video_rejected(self):
        with pytest.raises(ValueError):
            classic_track_video([], circle_points(33.0), ClassicPolarParams())


class TestRayProfiles:
    def test_profile_samples_frame_values(self):
        frame = disk_frame()
        prof = ray_profiles(frame, (64.0, 64.0), 45.0, 8, 64)
        assert prof.shape == (8, 64)
        assert prof[0, 0] == pytest.approx(frame.data[64, 64])
        # lumen dark, far background bright along every ray
        assert np.all(prof[:, 0] < 0.2) and np.all(prof[:, -1] > 0.8)


class TestAblations:
    def test_no_adaptation_flags(self):
        p = make_ablation("no-adaptation", AdPacParams())
        assert not p.spatial_adaptation and not p.temporal_adaptation

    def test_no_temporal_flags(self):
        p = make_ablation("no-temporal", AdPacParams())
        assert p.spatial_adaptation and not p.temporal_adaptation

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            make_ablation("no-such-thing", AdPacParams())
        assert "no-adaptation" in ABLATION_VARIANTS

    def test_no_adaptation_weights_uniform(self):
        frame = disk_frame(width=3.0)
        p = make_ablation("no-adaptation", AdPacParams())
        state, _ = init_from_manual(circle_points(30.0), frame, p)
        for w in (state.weights.alpha_n, state.weights.gamma_n, state.weights.zeta_n):
            assert np.ptp(w) == 0.0

    def test_no_temporal_matches_adpac_on_frame_one(self):
        frame = disk_frame(width=3.0)
        full, _ = init_from_manual(circle_points(30.0), frame, AdPacParams())
        frozen, _ = init_from_manual(circle_points(30.0), frame,
                                     make_ablation("no-temporal", AdPacParams()))
        np.testing.assert_allclose(frozen.weights.alpha_n, full.weights.alpha_n)
        np.testing.assert_allclose(frozen.weights.kappa_n, full.weights.kappa_n)

    def test_no_temporal_freezes_weights_across_frames(self):
        frame = disk_frame(width=3.0)
        p = make_ablation("no-temporal", AdPacParams())
        state, _ = init_from_manual(circle_points(30.0), frame, p)
        first = state.weights.alpha_n.copy()
        for _ in range(2):
            state, rec = track_frame(state, frame, p)
            assert not rec.aborted
        if state.weights.alpha_n.size == first.size:
            np.testing.assert_allclose(state.weights.alpha_n, first)
