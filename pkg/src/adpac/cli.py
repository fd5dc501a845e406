"""Command-line entry point: phantom generation, tracking, evaluation, sweeps."""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .baseline import ClassicPolarParams, classic_track_video, make_ablation
from .contour import from_json_line, rasterize, to_json_line
from .image import FormatError, load_frame
from .metrics import aggregate, confusion
from .phantom import PhantomSpec, preset, write_dataset
from .tracker import AdPacParams, InitError, track_video

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3

ALGOS = ("adpac", "adpac-nospatial", "adpac-notemporal", "classic-pac")

_BOOL_FIELDS = {"spatial_adaptation", "temporal_adaptation"}
_INT_FIELDS = {"max_iters", "contraction_sign", "stats_refresh"}


def _err(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def load_config(path: str | None) -> AdPacParams:
    """Parse key=value lines (# comments) into tracking parameters."""
    values: dict = {}
    names = {f.name for f in dataclasses.fields(AdPacParams)}
    if path:
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            if key not in names:
                raise ValueError(f"{path}:{lineno}: unknown parameter {key!r}")
            if key in _BOOL_FIELDS:
                values[key] = val.lower() in ("1", "true", "yes", "on")
            elif key in _INT_FIELDS:
                values[key] = int(val)
            else:
                values[key] = float(val)
    return AdPacParams(**values)


def _load_init(path: str) -> np.ndarray:
    data = json.loads(Path(path).read_text())
    return np.asarray(data["points"], dtype=np.float64)


def _list_frames(frames_dir: str) -> list[Path]:
    root = Path(frames_dir)
    return sorted(p for p in root.iterdir()
                  if p.suffix.lower() in (".pgm", ".png"))


def _run_tracking(frame_paths, init_points, params: AdPacParams, algo: str):
    frames = (load_frame(p) for p in frame_paths)
    if algo == "classic-pac":
        classic = ClassicPolarParams(r_factor=params.r_factor)
        return classic_track_video(frames, init_points, classic, spacing=params.spacing)
    if algo == "adpac-nospatial":
        params = make_ablation("no-adaptation", params)
    elif algo == "adpac-notemporal":
        params = make_ablation("no-temporal", params)
    elif algo != "adpac":
        raise ValueError(f"unknown algorithm {algo!r}")
    return track_video(frames, init_points, params)


def _write_outputs(records, out_prefix: str) -> None:
    contours_path = Path(f"{out_prefix}.contours.jsonl")
    diag_path = Path(f"{out_prefix}.diagnostics.csv")
    contours_path.parent.mkdir(parents=True, exist_ok=True)
    with contours_path.open("w") as fc, diag_path.open("w") as fd:
        fd.write("frame,iters,max_dr,warnings\n")
        for rec in records:
            fc.write(to_json_line(rec.contour, rec.frame_index) + "\n")
            fd.write(f"{rec.frame_index},{rec.iterations},{rec.max_dr!r},{rec.warnings}\n")


def cmd_phantom(args) -> int:
    try:
        if args.spec_file:
            spec = _spec_from_file(args.spec_file)
        else:
            spec = preset(args.preset)
        if args.seed is not None:
            spec = dataclasses.replace(spec, seed=args.seed)
        write_dataset(spec, args.frames, args.out)
    except (ValueError, OSError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    return EXIT_OK


def _spec_from_file(path: str) -> PhantomSpec:
    """Phantom spec from key=value lines mirroring the manifest format."""
    values: dict = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, val = (part.strip() for part in line.split("=", 1))
        values[key] = val
    kwargs: dict = {}
    simple_float = ("base_radius", "ellipse_ratio", "osc_amplitude", "osc_period",
                    "lumen", "wall", "background", "wall_thickness", "noise",
                    "blur_sigma")
    for key in simple_float:
        if key in values:
            kwargs[key] = float(values[key])
    for key in ("width", "height", "seed"):
        if key in values:
            kwargs[key] = int(values[key])
    if "center_x" in values or "center_y" in values:
        kwargs["center"] = (float(values.get("center_x", 190.0)),
                            float(values.get("center_y", 182.0)))
    if values.get("harmonics"):
        kwargs["harmonics"] = tuple(
            (int(m), float(a), float(p))
            for m, a, p in (h.split(":") for h in values["harmonics"].split(";")))
    if values.get("shadow"):
        a, w, att = values["shadow"].split(":")
        kwargs["shadow"] = (float(a), float(w), float(att))
    if "drift_x" in values or "drift_y" in values:
        kwargs["drift"] = (float(values.get("drift_x", 0.0)),
                           float(values.get("drift_y", 0.0)))
    return PhantomSpec(**kwargs)


def cmd_track(args) -> int:
    try:
        frame_paths = _list_frames(args.frames)
        if not frame_paths:
            _err(f"no frames found in {args.frames}")
            return EXIT_USAGE
        init_points = _load_init(args.init)
        params = load_config(args.config)
    except (OSError, ValueError, KeyError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    try:
        records = _run_tracking(frame_paths, init_points, params, args.algo)
    except (InitError, FormatError, ValueError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    except Exception as exc:  # mid-video failure: preserve nothing further
        _err(f"tracking failed: {exc}")
        return EXIT_RUNTIME
    _write_outputs(records, args.out)
    if any(rec.aborted for rec in records):
        _err("one or more frames aborted; partial results written")
        return EXIT_RUNTIME
    return EXIT_OK


def _metric_rows(contour_lines, mask_paths):
    rows = []
    for line, mask_path in zip(contour_lines, mask_paths):
        _, contour = from_json_line(line)
        ref = load_frame(mask_path).data > 0.5
        algo = rasterize(contour, ref.shape[1], ref.shape[0])
        rows.append(confusion(algo, ref))
    return rows


def cmd_eval(args) -> int:
    try:
        lines = [ln for ln in Path(args.contours).read_text().splitlines() if ln.strip()]
        mask_paths = _list_frames(args.masks)
        if len(lines) != len(mask_paths):
            _err(f"frame count mismatch: {len(lines)} contours vs {len(mask_paths)} masks")
            return EXIT_USAGE
        if not lines:
            _err("no frames to evaluate")
            return EXIT_USAGE
        rows = _metric_rows(lines, mask_paths)
    except (OSError, ValueError, KeyError, FormatError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    summary = aggregate(rows)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w") as f:
        f.write("frame,tp,fp,tn,fn,dice,sensitivity,specificity,fpr\n")
        for i, m in enumerate(rows):
            f.write(f"{i},{m.tp},{m.fp},{m.tn},{m.fn},"
                    f"{m.dice!r},{m.sensitivity!r},{m.specificity!r},{m.fpr!r}\n")
        f.write(f"mean,{sum(m.tp for m in rows)},{sum(m.fp for m in rows)},"
                f"{sum(m.tn for m in rows)},{sum(m.fn for m in rows)},"
                f"{summary['dice']['mean']!r},{summary['sensitivity']['mean']!r},"
                f"{summary['specificity']['mean']!r},{summary['fpr']['mean']!r}\n")
    print(f"mean_dice={summary['dice']['mean']:.6f} "
          f"min_dice={summary['dice']['min']:.6f} "
          f"mean_sensitivity={summary['sensitivity']['mean']:.6f} "
          f"mean_specificity={summary['specificity']['mean']:.6f}")
    return EXIT_OK


def _sweep_one(job):
    """Track + eval one sweep value; module-level for process pools."""
    param, value, data_dir, config_path, algo = job
    params = load_config(config_path)
    if param in _INT_FIELDS:
        params = dataclasses.replace(params, **{param: int(float(value))})
    else:
        params = dataclasses.replace(params, **{param: float(value)})
    data = Path(data_dir)
    frame_paths = _list_frames(data / "frames")
    init_points = _load_init(data / "init.json")
    records = _run_tracking(frame_paths, init_points, params, algo)
    mask_paths = _list_frames(data / "masks")
    rows = _metric_rows([to_json_line(r.contour, r.frame_index) for r in records],
                        mask_paths)
    summary = aggregate(rows)
    return (value, summary["dice"]["mean"], summary["sensitivity"]["mean"],
            summary["specificity"]["mean"])


def cmd_sweep(args) -> int:
    values = [v for v in (args.values or "").split(",") if v.strip()]
    if not values:
        _err("no sweep values given")
        return EXIT_USAGE
    names = {f.name for f in dataclasses.fields(AdPacParams)}
    if args.param not in names:
        _err(f"unknown parameter {args.param!r}")
        return EXIT_USAGE
    try:
        spec = preset(args.preset)
        if args.seed is not None:
            spec = dataclasses.replace(spec, seed=args.seed)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_USAGE
    try:
        with tempfile.TemporaryDirectory() as tmp:
            # one shared phantom realization: paired comparison across values
            write_dataset(spec, args.frames, tmp)
            jobs = [(args.param, v, tmp, args.config, args.algo) for v in values]
            workers = int(os.environ.get("ADPAC_THREADS", "1"))
            if workers > 1:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    results = list(pool.map(_sweep_one, jobs))
            else:
                results = [_sweep_one(job) for job in jobs]
    except (InitError, FormatError, ValueError, OSError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w") as f:
        f.write("value,mean_dice,mean_sensitivity,mean_specificity\n")
        for value, dice, sens, spec_score in results:
            f.write(f"{value},{dice!r},{sens!r},{spec_score!r}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adpac",
                                     description="Polar active contour tracking toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a synthetic vessel video")
    p.add_argument("--preset", default="good-oval")
    p.add_argument("--spec-file", default=None, help="key=value phantom spec file")
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("track", help="track a frame directory")
    p.add_argument("--frames", required=True)
    p.add_argument("--init", required=True, help='JSON {"points": [[x, y], ...]}')
    p.add_argument("--config", default=None, help="key=value parameter file")
    p.add_argument("--algo", choices=ALGOS, default="adpac")
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score contours against reference masks")
    p.add_argument("--contours", required=True)
    p.add_argument("--masks", required=True)
    p.add_argument("--out", required=True, help="metrics CSV path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="parameter sweep on a phantom preset")
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="comma-separated list")
    p.add_argument("--preset", default="good-oval")
    p.add_argument("--frames", type=int, default=30)
    p.add_argument("--config", default=None)
    p.add_argument("--algo", choices=ALGOS, default="adpac")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="sweep CSV path")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
