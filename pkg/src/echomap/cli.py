"""Command-line entry point.

Subcommands: gen (synthetic scene to PLY), segment (PLY to labeling JSON),
sonify (depth frame or cloud to MIDI / JSON-lines / WAV), bench (naive vs
chunked scaling harness, CSV out), eval (truth + results to a metrics
report).  Results go to stdout unless --out is given; errors go to stderr
with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .bench import DEFAULT_NAIVE_CUTOFF, default_template, run_benchmark
from .cloud import (
    SceneSpec,
    depth_frame_to_cloud,
    generate_scene,
    parse_depth_raw,
    parse_ply,
    project_cloud_to_frame,
    write_ply,
)
from .metrics import FrameResult, MetricsReport
from .midi import events_to_midi, render_wav, write_smf
from .segmentation import SegmentConfig, segment_chunked, segment_naive
from .sonify import SonifyConfig, downsample, schedule_frame

SEED_ENV = "ECHOMAP_SEED"


def _env_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _write_or_stdout(payload, out_path, binary: bool = False) -> None:
    if out_path is None:
        if binary:
            sys.stdout.buffer.write(payload)
        else:
            sys.stdout.write(payload)
    else:
        mode = "wb" if binary else "w"
        with open(out_path, mode) as fh:
            fh.write(payload)


def _segment_config(args) -> SegmentConfig:
    return SegmentConfig(
        chunk_size=args.chunk_size,
        threshold=args.threshold,
        connectivity=args.connectivity,
        min_points_per_object=args.min_points,
    )


def _add_segment_flags(parser, include_algo: bool = True) -> None:
    if include_algo:
        parser.add_argument("--algo", choices=("chunked", "naive"), default="chunked",
                            help="segmentation algorithm")
    parser.add_argument("--chunk-size", type=float, default=0.1, metavar="M",
                        help="chunk edge length in meters (chunked)")
    parser.add_argument("--threshold", type=float, default=0.05, metavar="M",
                        help="distance threshold in meters (naive)")
    parser.add_argument("--connectivity", type=int, choices=(6, 26), default=26,
                        help="chunk adjacency")
    parser.add_argument("--min-points", type=int, default=0, metavar="K",
                        help="discard objects smaller than K points (0 = off)")
    parser.add_argument("--backend", choices=("c", "py"), default=None,
                        help="force a kernel backend (default: best available)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="echomap",
        description="Depth sonification, point-cloud segmentation, and benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a synthetic scene as ASCII PLY")
    p_gen.add_argument("--spec", required=True, help="SceneSpec JSON file")
    p_gen.add_argument("--out", required=True, help="output PLY path")
    p_gen.add_argument("--truth", default=None,
                       help="also write {'expected_objects': N} JSON here")

    p_seg = sub.add_parser("segment", help="segment a PLY cloud into objects")
    p_seg.add_argument("--in", dest="input", required=True, help="input PLY file")
    _add_segment_flags(p_seg)
    p_seg.add_argument("--out", default=None, help="output JSON path (default: stdout)")

    p_son = sub.add_parser("sonify", help="turn a depth frame into sound events")
    p_son.add_argument("--in", dest="input", required=True,
                       help="input frame: .ply cloud or raw little-endian u16 grid")
    p_son.add_argument("--width", type=int, default=None, help="frame width in pixels")
    p_son.add_argument("--height", type=int, default=None, help="frame height in pixels")
    p_son.add_argument("--scale", type=float, default=0.001,
                       help="meters per raw depth unit")
    p_son.add_argument("--fx", type=float, default=None, help="focal length x (pixels)")
    p_son.add_argument("--fy", type=float, default=None, help="focal length y (pixels)")
    p_son.add_argument("--cx", type=float, default=None, help="principal point x")
    p_son.add_argument("--cy", type=float, default=None, help="principal point y")
    p_son.add_argument("--start", type=float, default=0.3, help="near depth bound (m)")
    p_son.add_argument("--end", type=float, default=6.0, help="far depth bound (m)")
    p_son.add_argument("--range", type=int, default=30, help="number of pitch steps")
    p_son.add_argument("--inter-onset", type=float, default=25.0,
                       help="milliseconds between time slots")
    p_son.add_argument("--note-duration", type=float, default=20.0,
                       help="note length in milliseconds")
    p_son.add_argument("--grid-width", type=int, default=16)
    p_son.add_argument("--grid-height", type=int, default=12)
    p_son.add_argument("--no-clamp-near", action="store_true",
                       help="silence depths nearer than start instead of pitch 96")
    p_son.add_argument("--base-velocity", type=int, default=100)
    p_son.add_argument("--segment", action="store_true",
                       help="segment the frame and give each object its own velocity")
    _add_segment_flags(p_son, include_algo=False)
    p_son.add_argument("--emit", choices=("midi", "json", "wav"), required=True)
    p_son.add_argument("--sample-rate", type=int, default=22050, help="WAV sample rate")
    p_son.add_argument("--out", default=None, help="output path (default: stdout)")

    p_bench = sub.add_parser("bench", help="naive vs chunked scaling benchmark")
    p_bench.add_argument("--sizes", required=True,
                         help="comma-separated ascending point counts")
    p_bench.add_argument("--reps", type=int, default=1, help="repetitions per size")
    p_bench.add_argument("--cutoff", type=int, default=DEFAULT_NAIVE_CUTOFF,
                         help="skip the naive baseline above this size")
    p_bench.add_argument("--seed", type=int, default=None,
                         help=f"scene seed (default: ${SEED_ENV} or 0)")
    _add_segment_flags(p_bench, include_algo=False)
    p_bench.add_argument("--out", default=None, help="output CSV path (default: stdout)")

    p_eval = sub.add_parser("eval", help="score detected against expected counts")
    p_eval.add_argument("--truth", required=True,
                        help="JSON with 'expected_objects': int or list of ints")
    p_eval.add_argument("--results", required=True, nargs="+",
                        help="segmentation JSON files, one per frame, in frame order")
    p_eval.add_argument("--out", default=None, help="output JSON path (default: stdout)")

    return parser


def _cmd_gen(args) -> int:
    spec_text = Path(args.spec).read_text()
    spec = SceneSpec.from_json(spec_text, default_seed=_env_seed())
    cloud, expected = generate_scene(spec)
    Path(args.out).write_bytes(write_ply(cloud))
    if args.truth is not None:
        Path(args.truth).write_text(json.dumps({"expected_objects": expected}) + "\n")
    return 0


def _cmd_segment(args) -> int:
    cloud = parse_ply(Path(args.input).read_bytes())
    config = _segment_config(args)
    if args.algo == "chunked":
        seg, stats = segment_chunked(cloud, config, return_stats=True,
                                     backend=args.backend)
        stats_dict = {
            "algo": "chunked",
            "quantizations": stats.quantizations,
            "neighbor_probes": stats.neighbor_probes,
            "occupied_chunks": stats.occupied_chunks,
        }
    else:
        seg, stats = segment_naive(cloud, config, return_stats=True,
                                   backend=args.backend)
        stats_dict = {"algo": "naive", "distance_evals": stats.distance_evals}
    payload = seg.to_json_dict()
    payload["stats"] = stats_dict
    _write_or_stdout(json.dumps(payload) + "\n", args.out)
    return 0


def _require(args, names: list[str], context: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise ValueError(f"{context} requires {', '.join(missing)}")


def _load_frame(args):
    path = Path(args.input)
    if path.suffix.lower() == ".ply":
        _require(args, ["width", "height", "fx", "fy", "cx", "cy"],
                 "sonifying a .ply cloud")
        cloud = parse_ply(path.read_bytes())
        frame = project_cloud_to_frame(cloud, args.width, args.height,
                                       args.fx, args.fy, args.cx, args.cy)
    else:
        _require(args, ["width", "height"], "raw depth input")
        frame = parse_depth_raw(path.read_bytes(), args.width, args.height, args.scale)
    return frame


def _cmd_sonify(args) -> int:
    frame = _load_frame(args)
    config = SonifyConfig(
        start=args.start,
        end=args.end,
        range=args.range,
        grid_width=args.grid_width,
        grid_height=args.grid_height,
        inter_onset=args.inter_onset,
        note_duration=args.note_duration,
        clamp_near=not args.no_clamp_near,
        base_velocity=args.base_velocity,
    )

    cell_ids = None
    num_objects = None
    if args.segment:
        _require(args, ["fx", "fy", "cx", "cy"], "--segment")
        cloud = depth_frame_to_cloud(frame, args.fx, args.fy, args.cx, args.cy)
        seg = segment_chunked(cloud, _segment_config(args), backend=args.backend)
        cell_ids = _majority_cell_labels(frame, seg.labels, config)
        num_objects = seg.num_objects

    grid = downsample(frame, config)
    events = schedule_frame(grid, config, cell_objects=cell_ids, num_objects=num_objects)

    if args.emit == "json":
        lines = "".join(json.dumps(e.to_json_dict()) + "\n" for e in events)
        _write_or_stdout(lines, args.out)
    elif args.emit == "midi":
        _write_or_stdout(write_smf(events_to_midi(events)), args.out, binary=True)
    else:
        _write_or_stdout(render_wav(events, args.sample_rate), args.out, binary=True)
    return 0


def _majority_cell_labels(frame, point_labels, config) -> np.ndarray:
    """Vote each sonification cell's object id from its pixels' point labels.

    Back-projected points are emitted in row-major pixel order, so the k-th
    nonzero pixel owns point label k.  Pixels vote in the cell whose block
    covers them; discarded points (-1) abstain; ties pick the smaller id.
    """
    gh, gw = config.grid_height, config.grid_width
    h, w = frame.depth.shape
    rows, cols = np.nonzero(frame.depth)
    labels = np.asarray(point_labels)
    cell_ids = np.full((gh, gw), -1, dtype=np.int64)
    voting = labels >= 0
    if not voting.any():
        return cell_ids
    cell_r = rows[voting] * gh // h
    cell_c = cols[voting] * gw // w
    flat_cell = cell_r * gw + cell_c
    num_objects = int(labels.max()) + 1
    tally = np.zeros((gh * gw, num_objects), dtype=np.int64)
    np.add.at(tally, (flat_cell, labels[voting]), 1)
    has_votes = tally.sum(axis=1) > 0
    winners = np.argmax(tally, axis=1)  # first maximum = smallest id on ties
    flat_ids = np.where(has_votes, winners, -1)
    return flat_ids.reshape(gh, gw)


def _cmd_bench(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise ValueError(f"--sizes must be comma-separated integers, got {args.sizes!r}") from None
    seed = args.seed if args.seed is not None else _env_seed()
    table = run_benchmark(
        sizes,
        default_template(seed=seed),
        _segment_config(args),
        repetitions=args.reps,
        naive_cutoff=args.cutoff,
        backend=args.backend,
    )
    _write_or_stdout(table.to_csv(), args.out)
    return 0


def _cmd_eval(args) -> int:
    truth = json.loads(Path(args.truth).read_text())
    expected = truth["expected_objects"]
    if isinstance(expected, int):
        expected = [expected]
    if len(expected) != len(args.results):
        raise ValueError(
            f"truth lists {len(expected)} frames but {len(args.results)} result files given"
        )
    frames = []
    for frame_id, (exp, path) in enumerate(zip(expected, args.results)):
        result = json.loads(Path(path).read_text())
        stats = result.get("stats", {})
        chunk_probes = stats.get("quantizations", 0) + stats.get("neighbor_probes", 0)
        frames.append(FrameResult(
            frame_id=frame_id,
            expected_objects=int(exp),
            detected_objects=int(result["num_objects"]),
            distance_evals=int(stats.get("distance_evals", 0)),
            chunk_probes=int(chunk_probes),
            wall_time_us=float(stats.get("wall_time_us", 0.0)),
        ))
    report = MetricsReport.from_frames(frames)
    _write_or_stdout(json.dumps(report.to_json_dict()) + "\n", args.out)
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "segment": _cmd_segment,
    "sonify": _cmd_sonify,
    "bench": _cmd_bench,
    "eval": _cmd_eval,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
