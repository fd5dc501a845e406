"""Acceptance gate: one check per release criterion, pinned tolerances.

Each test prints a single `criterion N: PASS/FAIL` line so the suite output
doubles as the acceptance report.
"""
import dataclasses
import math
import time

import numpy as np

from adpac.baseline import de2014_curvature_energy, make_ablation
from adpac.adaptation import adapt_alpha, adapt_beta
from adpac.cli import main as cli_main
from adpac.contour import MIN_POINTS, PolarContour, rasterize, update_point_count
from adpac.energy import (WeightSet, curvature_energy, curvature_gradient,
                          continuity_energy, continuity_gradient, sector_stats,
                          variational_gradient)
from adpac.image import Frame, compute_gradients, sample_bilinear
from adpac.metrics import confusion
from adpac.phantom import generate, preset, true_contour
from adpac.tracker import (AdPacParams, TrackerState, init_from_manual, minimize,
                           track_frame, track_video)
from oracles import fd_gradient, model_sector_stats, variational_model_energy

EPSILON = 1e-4


def report(num: int, description: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"criterion {num}: {status} - {description}{suffix}")
    assert ok, f"criterion {num} failed: {description}{suffix}"


def smooth_disk(size=160, r0=35.0, width=6.0):
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    r = np.hypot(xx - size / 2, yy - size / 2)
    return Frame(0.1 + 0.8 * 0.5 * (1 + np.tanh((r - r0) / width)))


def preset_video(name, n_frames, seed):
    spec = dataclasses.replace(preset(name), seed=seed)
    data = list(generate(spec, n_frames))
    frames = [Frame(f) for f, m, c in data]
    masks = [m for f, m, c in data]
    return spec, frames, masks


def mean_dice(records, masks):
    scores = [confusion(rasterize(r.contour, m.shape[1], m.shape[0]), m).dice
              for r, m in zip(records, masks)]
    return float(np.mean(scores))


def test_01_gradient_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    worst = 0.0
    for n in (8, 16, 64):
        for _ in range(100):
            c = PolarContour((0.0, 0.0), rng.uniform(5.0, 50.0, n))
            w = rng.uniform(0.1, 3.0, n)
            for grad, energy in ((curvature_gradient, curvature_energy),
                                 (continuity_gradient, continuity_energy)):
                got = grad(c, w)
                fd = fd_gradient(lambda r: energy(c.with_radii(r), w), c.radii)
                worst = max(worst, np.max(np.abs(got - fd)) / np.max(np.abs(fd)))
    shape_ok = worst <= 1e-5

    frame = smooth_disk()
    var_worst = 0.0
    for trial in range(3):
        trng = np.random.default_rng(100 + trial)
        c = PolarContour((80.0, 80.0), 35.0 + trng.uniform(-0.25, 0.25, 64))
        kappa = np.ones(64)
        stats = model_sector_stats(frame, c, 60.0)
        got = variational_gradient(stats, c, kappa)
        fd = fd_gradient(
            lambda r: variational_model_energy(frame, c.with_radii(r), 60.0, kappa),
            c.radii, h=1e-4)
        var_worst = max(var_worst, np.max(np.abs(got - fd)) / np.max(np.abs(fd)))
    var_ok = var_worst <= 5e-2
    elapsed = time.perf_counter() - t0
    report(1, "analytic gradients match finite differences",
           shape_ok and var_ok and elapsed < 10.0,
           f"shape rel err {worst:.2e}, variational rel err {var_worst:.2e}, "
           f"{elapsed:.1f}s")


def test_02_adaptation_fixed_point():
    lo, hi = 1.0, 0.0
    for n in (8, 16, 64):
        for rho in (5.0, 20.0, 48.7, 90.0):
            if 2.0 * math.pi * rho / n < 3.9:
                continue  # sub-4px spacing: brackets shrink toward epsilon
            c = PolarContour((0.0, 0.0), np.full(n, rho))
            mags = np.abs(curvature_gradient(c, adapt_alpha(c.radii, c.phi0, EPSILON)))
            lo, hi = min(lo, mags.min()), max(hi, mags.max())
            mags = np.abs(continuity_gradient(c, adapt_beta(c.radii, c.phi0, EPSILON)))
            lo, hi = min(lo, mags.min()), max(hi, mags.max())
    report(2, "adapted weights normalize per-point gradient magnitudes",
           0.98 <= lo and hi <= 1.02, f"range [{lo:.4f}, {hi:.4f}]")


def test_03_curvature_critique():
    ok = True
    for n in (6, 12, 33):
        for rho in (1.0, 14.2, 60.0):
            c = PolarContour((0.0, 0.0), np.full(n, rho))
            ok &= de2014_curvature_energy(c.radii) == 0.0
            ok &= curvature_energy(c, np.ones(n)) > 0.0
    report(3, "second-difference curvature is blind to circles, "
              "the replacement energy is not", ok)


def test_04_point_count_exactness():
    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(1000):
        p = rng.uniform(0.1, 2000.0)
        lam = rng.uniform(0.5, 60.0)
        want = max(MIN_POINTS, math.ceil(p / lam))
        mismatches += update_point_count(p, lam) != want
    report(4, "point count equals clamped ceiling of perimeter/spacing",
           mismatches == 0, f"{mismatches}/1000 mismatches")


def test_05_phantom_tracking():
    results = {}
    times = {}
    for name in ("good-oval", "high-variation", "poor-shadow"):
        spec, frames, masks = preset_video(name, 100, seed=7)
        manual = true_contour(spec, 0, 16).points()
        t0 = time.perf_counter()
        records = track_video(frames, manual, AdPacParams())
        times[name] = time.perf_counter() - t0
        results[name] = mean_dice(records, masks)
    spec, frames, masks = preset_video("poor-shadow", 100, seed=7)
    manual = true_contour(spec, 0, 16).points()
    t0 = time.perf_counter()
    frozen = track_video(frames, manual,
                         make_ablation("no-adaptation", AdPacParams()))
    times["no-adaptation"] = time.perf_counter() - t0
    gap = results["poor-shadow"] - mean_dice(frozen, masks)
    ok = (results["good-oval"] >= 0.95 and results["high-variation"] >= 0.85
          and gap >= 0.05 and max(times.values()) < 60.0)
    report(5, "preset videos tracked to target overlap", ok,
           f"good-oval {results['good-oval']:.3f}, "
           f"high-variation {results['high-variation']:.3f}, "
           f"shadow gap {gap:.3f}, slowest run {max(times.values()):.1f}s")


def test_06_spacing_sweep_trend():
    scores = {}
    for lam in (5.0, 20.0, 40.0):
        spec, frames, masks = preset_video("good-oval", 40, seed=11)
        manual = true_contour(spec, 0, 16).points()
        params = dataclasses.replace(AdPacParams(), spacing=lam)
        scores[lam] = mean_dice(track_video(frames, manual, params), masks)
    ok = scores[5.0] >= scores[20.0] >= scores[40.0]
    report(6, "overlap does not improve as point spacing coarsens", ok,
           ", ".join(f"spacing {k:g}: {v:.3f}" for k, v in scores.items()))


def test_07_equilibrium_contract():
    frame = smooth_disk(size=128, r0=30.0, width=3.0)
    grads = compute_gradients(frame)
    ok = True
    for max_iters in (1, 25, 5000):
        for start in (28.0, 31.0, 33.0):
            params = dataclasses.replace(AdPacParams(), max_iters=max_iters)
            c = PolarContour((64.0, 64.0), np.full(20, start))
            w = WeightSet.uniform(20, alpha=params.alpha, beta=params.beta,
                                  gamma=params.gamma, kappa=params.kappa,
                                  zeta=params.zeta, nu=params.nu)
            ref = sample_bilinear(frame.data, *c.points().T)
            state = TrackerState(contour=c, weights=w,
                                 search_radius=params.r_factor * c.max_radius(),
                                 ref_intensity=ref, frame=frame, gradients=grads)
            res = minimize(state, frame, grads, params)
            ok &= res.max_dr < params.tol or res.iterations == params.max_iters
    report(7, "minimize only stops at equilibrium or the iteration cap", ok)


def test_08_throughput():
    spec, frames, masks = preset_video("good-oval", 31, seed=7)
    # spacing chosen so the resampled contour carries about 64 points
    perim = 2 * math.pi * spec.base_radius * (1 + spec.ellipse_ratio) / 2
    params = dataclasses.replace(AdPacParams(), spacing=perim / 64.0)
    manual = true_contour(spec, 0, 16).points()
    state, rec = init_from_manual(manual, frames[0], params)
    n_points = state.contour.n_points
    per_frame = []
    for frame in frames[1:]:
        t0 = time.perf_counter()
        state, rec = track_frame(state, frame, params)
        per_frame.append(time.perf_counter() - t0)
    median_ms = 1000.0 * float(np.median(per_frame))
    report(8, "median per-frame tracking time within budget",
           median_ms <= 50.0 and 56 <= n_points <= 72,
           f"{median_ms:.1f} ms at N={n_points} on "
           f"{spec.width}x{spec.height} frames")


def test_09_metrics_exactness():
    full = np.zeros((8, 8), dtype=bool)
    full[2:6, 2:6] = True
    half = np.zeros((8, 8), dtype=bool)
    half[2:6, 0:4] = True  # overlaps 8 of 16 pixels
    empty = np.zeros((8, 8), dtype=bool)
    other = np.zeros((8, 8), dtype=bool)
    other[6:8, 6:8] = True
    identical = confusion(full, full)
    disjoint = confusion(full, other)
    overlap = confusion(half, full)
    ok = (identical.dice == 1.0 and identical.sensitivity == 1.0
          and disjoint.dice == 0.0 and disjoint.sensitivity == 0.0
          and overlap.tp == 8 and overlap.dice == 0.5 and overlap.sensitivity == 0.5)
    report(9, "hand-counted 8x8 masks score exactly", ok)


def test_10_determinism(tmp_path):
    spec_path = tmp_path / "spec.txt"
    spec_path.write_text("width=128\nheight=128\ncenter_x=64.0\ncenter_y=64.0\n"
                         "base_radius=20.0\nnoise=0.05\nseed=5\n")
    outputs = {}
    for run in ("a", "b"):
        root = tmp_path / run
        assert cli_main(["phantom", "--spec-file", str(spec_path), "--frames", "3",
                         "--out", str(root / "data")]) == 0
        assert cli_main(["track", "--frames", str(root / "data" / "frames"),
                         "--init", str(root / "data" / "init.json"),
                         "--out", str(root / "run")]) == 0
        assert cli_main(["eval", "--contours", str(root / "run.contours.jsonl"),
                         "--masks", str(root / "data" / "masks"),
                         "--out", str(root / "metrics.csv")]) == 0
        outputs[run] = tuple(
            (root / rel).read_bytes()
            for rel in ("run.contours.jsonl", "run.diagnostics.csv", "metrics.csv"))
    report(10, "seeded end-to-end runs emit byte-identical outputs",
           outputs["a"] == outputs["b"])
