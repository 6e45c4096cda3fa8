"""Command-line front door: track / kin / pillar / eval / synth / pipeline.

Flag precedence is flags > JSON config file (--config) > defaults.
Exit codes: 0 success, 1 input error, 2 internal-consistency error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import detect, match
from .evaluate import EvalConfig, evaluate_tracks
from .images import FrameError, load_frame, write_pgm
from .kinematics import (
    Region,
    growth_series,
    orientation_series,
    track_displacements,
)
from .pillar import reconstruct_sequence
from .synth import SynthConfig, generate
from .tracker import InternalConsistencyError, track_features
from .types import (
    SequenceCalibration,
    TrackerConfig,
    read_tracks_csv,
    write_tracks_csv,
)

log = logging.getLogger("vftrack")


class CliError(Exception):
    """User-facing input error; exits with status 1."""


def _fmt(v) -> str:
    if v is None:
        return ""
    return f"{v:.9g}"


def _setup_logging():
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("VFTRACK_LOG", "info"), logging.INFO
    )
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")


def _load_config_file(path):
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            cfg = json.load(f)
    except OSError as e:
        raise CliError(f"cannot read config file {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise CliError(f"{path}: invalid JSON: {e}") from None
    if not isinstance(cfg, dict):
        raise CliError(f"{path}: config must be a JSON object")
    return cfg


def _resolve(flag_value, cfg, key, default):
    if flag_value is not None:
        return flag_value
    if key in cfg:
        return cfg[key]
    return default


def _frame_paths(frames_dir, manifest):
    if manifest is not None:
        try:
            with open(manifest, "r", encoding="utf-8") as f:
                names = [ln.strip() for ln in f if ln.strip()]
        except OSError as e:
            raise CliError(f"cannot read manifest {manifest}: {e}") from None
        base = Path(frames_dir) if frames_dir else Path(".")
        paths = [base / n for n in names]
    else:
        if frames_dir is None:
            raise CliError("--frames is required (or provide --manifest)")
        d = Path(frames_dir)
        if not d.is_dir():
            raise CliError(f"frames directory not found: {frames_dir}")
        paths = sorted(
            p for p in d.iterdir() if p.suffix.lower() in (".pgm", ".png")
        )
    if not paths:
        raise CliError("no frames found")
    for p in paths:
        if not p.is_file():
            raise CliError(f"frame file not found: {p}")
    return paths


def _read_tracks(path):
    try:
        return read_tracks_csv(path)
    except OSError as e:
        raise CliError(f"cannot read tracks file {path}: {e}") from None
    except ValueError as e:
        raise CliError(str(e)) from None


def _load_regions(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise CliError(f"cannot read regions file {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise CliError(f"{path}: invalid JSON: {e}") from None
    if not isinstance(data, list):
        raise CliError(f"{path}: regions file must be a JSON array")
    regions = []
    for i, rec in enumerate(data):
        try:
            regions.append(
                Region(
                    name=str(rec["name"]),
                    x_min=float(rec["x_min"]),
                    y_min=float(rec["y_min"]),
                    x_max=float(rec["x_max"]),
                    y_max=float(rec["y_max"]),
                )
            )
        except (KeyError, TypeError, ValueError) as e:
            raise CliError(f"{path}: region #{i}: {e}") from None
    return regions


# ---------------------------------------------------------------------------
# track
# ---------------------------------------------------------------------------

def _make_feature_source(args, cfg, config: TrackerConfig, jobs: int):
    """Iterable of per-frame feature lists plus the frame count."""
    detector_kind = _resolve(args.detector, cfg, "detector", "native")
    matcher_kind = _resolve(args.matcher, cfg, "matcher", "native")

    imported_kpts = None
    if detector_kind == "import":
        if args.keypoints is None:
            raise CliError("--keypoints is required with --detector import")
        try:
            imported_kpts = detect.load_keypoints_file(args.keypoints)
        except (OSError, ValueError) as e:
            raise CliError(str(e)) from None
    elif detector_kind != "native":
        raise CliError(f"unknown detector {detector_kind!r}")

    if args.frames is not None or args.manifest is not None:
        paths = _frame_paths(args.frames, args.manifest)
        n_frames = len(paths)
    elif imported_kpts:
        paths = None
        n_frames = max(imported_kpts) + 1
    else:
        raise CliError("--frames is required with the native detector")

    def detect_one(i):
        if detector_kind == "import":
            return imported_kpts.get(i, [])
        try:
            frame = load_frame(paths[i], index=i)
        except (OSError, FrameError) as e:
            raise CliError(f"frame {i}: {e}") from None
        return detect.detect_native(frame, config)

    if paths is not None and jobs > 1:
        # bounded prefetch; detection is pure so order/results stay deterministic
        executor = ThreadPoolExecutor(max_workers=jobs)

        def source():
            pending = []
            nxt = 0
            for i in range(n_frames):
                while nxt < n_frames and len(pending) < jobs + 1:
                    pending.append(executor.submit(detect_one, nxt))
                    nxt += 1
                yield pending.pop(0).result()
            executor.shutdown()
    else:
        def source():
            for i in range(n_frames):
                yield detect_one(i)

    if matcher_kind == "native":
        def matcher(prev_feats, curr_feats, frame_index):
            return match.match_native(prev_feats, curr_feats, config)
    elif matcher_kind == "import":
        if args.matches is None:
            raise CliError("--matches is required with --matcher import")
        try:
            records = match.import_matches(args.matches)
        except (OSError, ValueError) as e:
            raise CliError(str(e)) from None

        def matcher(prev_feats, curr_feats, frame_index):
            return match.build_match_pairs(
                records.get(frame_index, []),
                [kp for kp, _ in prev_feats],
                [kp for kp, _ in curr_feats],
                path=args.matches,
            )
    else:
        raise CliError(f"unknown matcher {matcher_kind!r}")

    return source, matcher, n_frames


def cmd_track(args):
    cfg = _load_config_file(args.config)
    config = TrackerConfig(
        dist_th=float(_resolve(args.dist_th, cfg, "dist_th", 40.0)),
        max_keypoints=int(_resolve(args.max_keypoints, cfg, "max_keypoints", 2048)),
        ratio_threshold=float(_resolve(args.ratio, cfg, "ratio_threshold", 0.8)),
    )
    jobs = args.jobs if args.jobs is not None else min(os.cpu_count() or 1, 4)
    source, matcher, n_frames = _make_feature_source(args, cfg, config, jobs)

    timings = []
    last = time.perf_counter()

    def on_frame(i):
        nonlocal last
        now = time.perf_counter()
        timings.append(now - last)
        last = now
        if args.timing:
            log.info("frame %d: %.4f s", i, timings[-1])

    tracks, _ = track_features(source(), matcher, config, frame_callback=on_frame)
    write_tracks_csv(tracks, args.out)
    if args.timing and timings:
        log.info(
            "processed %d frames, median latency %.4f s",
            n_frames,
            float(np.median(timings)),
        )
    log.info("wrote %d tracks to %s", len(tracks), args.out)
    return tracks


# ---------------------------------------------------------------------------
# kin
# ---------------------------------------------------------------------------

def _write_kin_csv(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("frame,region,mean_dy_px,rate_um_per_s,mean_theta_deg,std_theta_deg,count\n")
        for frame, region, mean_dy, rate, mean_th, std_th, count in rows:
            f.write(
                f"{frame},{region},{_fmt(mean_dy)},{_fmt(rate)},"
                f"{_fmt(mean_th)},{_fmt(std_th)},{count}\n"
            )


def cmd_kin(args):
    cfg = _load_config_file(args.config)
    tracks = _read_tracks(args.tracks)
    interval = float(_resolve(args.interval, cfg, "interval", 2.0))
    scale = _resolve(args.scale, cfg, "scale", None)
    calibration = SequenceCalibration(
        frame_interval=interval,
        pixel_scale=float(scale) if scale is not None else None,
    )
    min_len = int(_resolve(args.min_track_len, cfg, "min_track_len", 2))
    displacements = track_displacements(tracks, min_track_len=min_len)

    groups = [("global", displacements)]
    if args.regions is not None:
        for region in _load_regions(args.regions):
            members = [
                d for d in displacements if region.contains(d.start_x, d.start_y)
            ]
            groups.append((region.name, members))

    rows = []
    for name, members in groups:
        series = growth_series(members, calibration)
        orient = orientation_series(members)
        for frame in series.frames():
            gp = series.points[frame]
            mean_th, std_th, _ = orient[frame]
            rows.append(
                (frame, name, gp.mean_dy_px, gp.rate_um_per_s, mean_th, std_th, gp.count)
            )
    _write_kin_csv(args.out, rows)
    log.info("wrote %d kinematics rows to %s", len(rows), args.out)


# ---------------------------------------------------------------------------
# pillar
# ---------------------------------------------------------------------------

def cmd_pillar(args):
    cfg = _load_config_file(args.config)
    tracks = _read_tracks(args.tracks)
    scale = _resolve(args.scale, cfg, "scale", None)
    calibration = SequenceCalibration(
        pixel_scale=float(scale) if scale is not None else None
    )
    shape, series = reconstruct_sequence(
        tracks,
        calibration=calibration,
        center_x=args.center_x,
        trim_fraction=0.05 if args.trimmed_mean else 0.0,
    )
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        f.write("x_pillar,y_pillar,birth_frame\n")
        for x, y, birth in shape.points:
            f.write(f"{_fmt(x)},{_fmt(y)},{int(birth)}\n")
    if args.series is not None:
        with open(args.series, "w", encoding="utf-8", newline="\n") as f:
            f.write("frame,height_px,drift_px,height_um,drift_um\n")
            for sp in series:
                f.write(
                    f"{sp.frame_index},{_fmt(sp.height_px)},{_fmt(sp.drift_px)},"
                    f"{_fmt(sp.height_um)},{_fmt(sp.drift_um)}\n"
                )
    log.info("wrote pillar shape (%d points) to %s", len(shape.points), args.out)


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def cmd_eval(args):
    cfg = _load_config_file(args.config)
    config = EvalConfig(
        gate=float(_resolve(args.gate, cfg, "gate", 5.0)),
        pairing_mode=_resolve(args.pairing, cfg, "pairing", "optimal"),
        min_track_len=int(_resolve(args.min_track_len, cfg, "min_track_len", 2)),
    )
    gt = _read_tracks(args.gt)
    est = _read_tracks(args.est)
    try:
        report = evaluate_tracks(gt, est, config)
    except ValueError as e:
        raise CliError(str(e)) from None
    payload = report.to_dict()
    payload["config"] = {
        "gate": config.gate,
        "pairing_mode": config.pairing_mode,
        "min_track_len": config.min_track_len,
    }
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    log.info(
        "alpha=%.4f precision=%.4f recall=%.4f f1=%.4f",
        report.alpha, report.precision, report.recall, report.f1,
    )
    return report


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def cmd_synth(args):
    cfg = _load_config_file(args.config)
    try:
        config = SynthConfig(
            n_frames=int(cfg.get("n_frames", 100)),
            n_particles=int(cfg.get("n_particles", 200)),
            growth_px_per_frame=float(cfg.get("growth_px_per_frame", 3.0)),
            drift_px_per_frame=float(cfg.get("drift_px_per_frame", 0.5)),
            oscillation_std_start_deg=float(cfg.get("oscillation_std_start_deg", 0.0)),
            oscillation_std_end_deg=float(cfg.get("oscillation_std_end_deg", 50.0)),
            position_noise_px=float(cfg.get("position_noise_px", 0.5)),
            spawn_rate=cfg.get("spawn_rate"),
            survival_prob=float(cfg.get("survival_prob", 0.95)),
            seed=int(args.seed if args.seed is not None else cfg.get("seed", 0)),
            frame_width=int(cfg.get("frame_width", 768)),
            frame_height=int(cfg.get("frame_height", 768)),
        )
    except (TypeError, ValueError) as e:
        raise CliError(f"invalid synth config: {e}") from None

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = generate(config, render=args.render)

    write_tracks_csv(result.tracks, out_dir / "gt.csv")
    with open(out_dir / "keypoints.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for feats in result.keypoints_by_frame:
            for kp, desc in feats:
                rec = {
                    "frame": kp.frame_index,
                    "x": kp.x,
                    "y": kp.y,
                    "score": kp.response,
                    "descriptor": [round(v, 9) for v in desc.values],
                }
                f.write(json.dumps(rec) + "\n")
    with open(out_dir / "matches.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for frame in sorted(result.matches_by_frame):
            for pi, ci in result.matches_by_frame[frame]:
                f.write(
                    json.dumps(
                        {"frame": frame, "prev_index": pi, "curr_index": ci, "score": 1.0}
                    )
                    + "\n"
                )
    if result.frames is not None:
        for i, buf in enumerate(result.frames):
            write_pgm(out_dir / f"frame_{i:05d}.pgm", buf)
    log.info(
        "generated %d frames, %d ground-truth tracks in %s",
        config.n_frames, len(result.tracks), out_dir,
    )


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def cmd_pipeline(args):
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    args.out = str(out_dir / "tracks.csv")
    cmd_track(args)

    kin_args = argparse.Namespace(
        config=args.config,
        tracks=args.out,
        interval=args.interval,
        scale=args.scale,
        regions=args.regions,
        min_track_len=args.min_track_len,
        out=str(out_dir / "kin.csv"),
    )
    cmd_kin(kin_args)

    pillar_args = argparse.Namespace(
        config=args.config,
        tracks=args.out,
        scale=args.scale,
        center_x=None,
        trimmed_mean=False,
        out=str(out_dir / "pillar.csv"),
        series=str(out_dir / "pillar_series.csv"),
    )
    cmd_pillar(pillar_args)

    if args.gt is not None:
        eval_args = argparse.Namespace(
            config=args.config,
            gt=args.gt,
            est=args.out,
            gate=args.gate,
            pairing=args.pairing,
            min_track_len=args.min_track_len,
            out=str(out_dir / "report.json"),
        )
        cmd_eval(eval_args)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vftrack")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_track_flags(p):
        p.add_argument("--frames", help="directory of PGM/PNG frames")
        p.add_argument("--manifest", help="explicit ordered list of frame files")
        p.add_argument("--detector", choices=["native", "import"])
        p.add_argument("--keypoints", help="JSON-lines keypoint file for --detector import")
        p.add_argument("--matcher", choices=["native", "import"])
        p.add_argument("--matches", help="JSON-lines match file for --matcher import")
        p.add_argument("--dist-th", type=float, dest="dist_th")
        p.add_argument("--max-keypoints", type=int, dest="max_keypoints")
        p.add_argument("--ratio", type=float)
        p.add_argument("--timing", action="store_true")
        p.add_argument("--jobs", type=int)
        p.add_argument("--config", help="JSON config file (flags take precedence)")

    p = sub.add_parser("track", help="run detect/match/prune/extend/terminate")
    add_track_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("kin", help="growth-rate and orientation time series")
    p.add_argument("--tracks", required=True)
    p.add_argument("--interval", type=float)
    p.add_argument("--scale", type=float)
    p.add_argument("--regions")
    p.add_argument("--min-track-len", type=int, dest="min_track_len")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_kin)

    p = sub.add_parser("pillar", help="reconstruct pillar morphology")
    p.add_argument("--tracks", required=True)
    p.add_argument("--scale", type=float)
    p.add_argument("--center-x", type=float, dest="center_x")
    p.add_argument("--trimmed-mean", action="store_true", dest="trimmed_mean")
    p.add_argument("--out", required=True)
    p.add_argument("--series")
    p.add_argument("--config")
    p.set_defaults(func=cmd_pillar)

    p = sub.add_parser("eval", help="score tracks against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--gate", type=float)
    p.add_argument("--pairing", choices=["optimal", "greedy"])
    p.add_argument("--min-track-len", type=int, dest="min_track_len")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic growth sequence")
    p.add_argument("--config", help="JSON synth configuration")
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.add_argument("--render", action="store_true")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pipeline", help="track + kin + pillar (+ eval with --gt)")
    add_track_flags(p)
    p.add_argument("--out-dir", default=".", dest="out_dir")
    p.add_argument("--interval", type=float)
    p.add_argument("--scale", type=float)
    p.add_argument("--regions")
    p.add_argument("--min-track-len", type=int, dest="min_track_len")
    p.add_argument("--gt")
    p.add_argument("--gate", type=float)
    p.add_argument("--pairing", choices=["optimal", "greedy"])
    p.set_defaults(func=cmd_pipeline)

    return parser


def run(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code not in (0, None) else 0
    try:
        args.func(args)
    except CliError as e:
        log.error("%s", e)
        return 1
    except InternalConsistencyError as e:
        log.error("internal consistency error: %s", e)
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
