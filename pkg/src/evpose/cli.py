"""Command line front end.

Subcommands cover the pipeline end to end: simulate events from frames,
aggregate streams into tensors, render ground-truth heatmaps, train the
toy predictor, score predictions, and format reports. Every RunConfig key
is exposed as a flag (flag beats config file beats default), and all
outputs are byte-reproducible: reruns with the same inputs and flags must
produce identical files, which is why BLAS pools are pinned to one thread
here.

Exit codes: 0 success, 2 configuration or usage error, 3 I/O failure,
4 invalid data.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from threadpoolctl import threadpool_limits

from . import __version__
from .config import COUNT_MODES, RunConfig, load_config
from .errors import ConfigError, EvposeError
from .evaluation import (
    ProtocolConfig,
    apply_protocol,
    emit_report,
    evaluate_poses,
    per_movement_report,
    read_records,
    write_records,
)
from .events_io import read_calibration, read_events, read_skeletons, write_events
from .geometry import (
    JointSet,
    NormalizationContext,
    ndc_from_world,
    read_ndc_csv,
    render_heatmaps,
    write_ndc_csv,
)
from .representations import aggregate_windows, window_stream
from .simulator import SimulatorConfig, load_frame_dir, simulate_sequence
from .synthetic import make_moving_dot_dataset
from .tensorio import save_tensor
from .training import save_checkpoint, train_toy

_FLAG_TYPES = {"int": int, "float": float, "str": str}


def _config_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("run configuration")
    group.add_argument("--config", metavar="FILE", help="key = value file; flags override it")
    for f in dataclasses.fields(RunConfig):
        kwargs = {"default": None, "help": f"default {f.default}"}
        if f.name == "count_mode":
            kwargs["choices"] = COUNT_MODES
        else:
            kwargs["type"] = _FLAG_TYPES[f.type]
        group.add_argument("--" + f.name.replace("_", "-"), dest=f.name, **kwargs)
    return parent


def _build_config(args: argparse.Namespace) -> RunConfig:
    overrides = {f.name: getattr(args, f.name) for f in dataclasses.fields(RunConfig)}
    if args.config:
        return load_config(args.config, overrides)
    return RunConfig(**{k: v for k, v in overrides.items() if v is not None})


def _cmd_simulate(args) -> None:
    cfg = _build_config(args)
    frames = load_frame_dir(args.frames)
    stream = simulate_sequence(frames, SimulatorConfig.from_run_config(cfg))
    write_events(stream, args.out, args.format)
    print(f"{len(stream)} events from {len(frames)} frames -> {args.out}")


def _cmd_aggregate(args) -> None:
    cfg = _build_config(args)
    stream = read_events(args.events).validate()
    windows = window_stream(stream, cfg.n_events)
    tensors = aggregate_windows(windows, args.representation, cfg.bins, cfg.count_mode)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = ["window,t_start,t_end"]
    for w, tensor in zip(windows, tensors):
        save_tensor(tensor, out_dir / f"window_{w.index:06d}.bin")
        index.append(f"{w.index},{w.t_start},{w.t_end}")
    (out_dir / "windows.csv").write_text("\n".join(index) + "\n")
    print(f"{len(windows)} windows of {cfg.n_events} events -> {out_dir}")


def _cmd_render_gt(args) -> None:
    cfg = _build_config(args)
    samples = read_skeletons(args.skeletons)
    calib = read_calibration(args.calib)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, sample in enumerate(samples):
        ctx = NormalizationContext.for_skeleton(
            calib, args.sensor_width, args.sensor_height, sample.joints, cfg.depth_half_extent
        )
        pose = ndc_from_world(JointSet.all_valid(sample.joints), ctx)
        rows.append((sample.t, pose))
        maps = render_heatmaps(pose, cfg.heatmap_res, cfg.sigma)
        save_tensor(maps.planes, out_dir / f"heatmaps_{i:06d}.bin")
    write_ndc_csv(rows, out_dir / "ndc.csv")
    print(f"{len(rows)} poses -> {out_dir}")


def _cmd_train_toy(args) -> None:
    cfg = _build_config(args)
    samples = make_moving_dot_dataset(
        args.samples,
        cfg.seed,
        res=cfg.heatmap_res,
        sigma=cfg.sigma,
        n_events=args.toy_events,
        count_mode=cfg.count_mode,
    )
    model, curve = train_toy(
        samples,
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=cfg.lr,
        seed=cfg.seed,
        temperature=cfg.temperature,
        epsilon=cfg.epsilon,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, out_dir / "checkpoint.bin")
    lines = ["epoch,total,geometric,divergence"]
    lines += [f"{s.epoch},{s.total!r},{s.geometric!r},{s.divergence!r}" for s in curve]
    (out_dir / "curve.csv").write_text("\n".join(lines) + "\n")
    print(f"trained {args.epochs} epochs; final loss {curve[-1].total!r} -> {out_dir}")


def _parse_subjects(text: str) -> frozenset:
    try:
        return frozenset(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad subject list {text!r}") from None


def _cmd_eval(args) -> None:
    cfg = _build_config(args)
    preds = read_ndc_csv(args.pred)
    gts = read_skeletons(args.skeletons)
    calib = read_calibration(args.calib)
    records = evaluate_poses(
        preds, gts, calib, args.sensor_width, args.sensor_height, cfg.depth_half_extent
    )
    if args.stride is not None or args.test_subjects is not None:
        test = (
            _parse_subjects(args.test_subjects)
            if args.test_subjects is not None
            else frozenset(r.subject_id for r in records)
        )
        protocol = ProtocolConfig(
            train_subjects=frozenset(),
            test_subjects=test,
            frame_stride=args.stride if args.stride is not None else 1,
        )
        keep = set(apply_protocol([r.ref for r in records], protocol))
        records = [r for r in records if r.ref in keep]
    write_records(records, args.out)
    print(f"{len(records)} records -> {args.out}")


def _cmd_report(args) -> None:
    records = read_records(args.records)
    report = per_movement_report(records)
    fmt = args.format
    if fmt is None:
        suffix = Path(args.out).suffix.lower().lstrip(".")
        fmt = {"csv": "csv", "jsonl": "jsonl", "svg": "svg"}.get(suffix)
        if fmt is None:
            raise ConfigError(f"cannot infer report format from {args.out!r}; pass --format")
    emit_report(report, args.out, fmt)
    print(f"{len(report.rows)} movements, mean {report.mean_mm!r} mm -> {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evpose",
        description="Event-camera 3D human pose toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    cfg = _config_parent()

    p = sub.add_parser("simulate", parents=[cfg], help="frames -> event stream")
    p.add_argument("--frames", required=True, help="directory of <microseconds>.pgm frames")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("binary", "csv"), default=None,
                   help="default: by output suffix")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("aggregate", parents=[cfg], help="event stream -> window tensors")
    p.add_argument("--events", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--representation", choices=("constant-count", "voxel"),
                   default="constant-count")
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("render-gt", parents=[cfg], help="skeletons -> cube poses and heatmaps")
    p.add_argument("--skeletons", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--sensor-width", type=int, default=346)
    p.add_argument("--sensor-height", type=int, default=260)
    p.set_defaults(func=_cmd_render_gt)

    p = sub.add_parser("train-toy", parents=[cfg], help="fit the affine toy predictor")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--samples", type=int, default=128)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--toy-events", type=int, default=512,
                   help="constant-count window size for the synthetic dot")
    p.set_defaults(func=_cmd_train_toy)

    p = sub.add_parser("eval", parents=[cfg], help="score cube-space predictions")
    p.add_argument("--pred", required=True, help="cube pose csv")
    p.add_argument("--skeletons", required=True, help="world ground truth csv")
    p.add_argument("--calib", required=True)
    p.add_argument("--out", required=True, help="records jsonl")
    p.add_argument("--sensor-width", type=int, default=346)
    p.add_argument("--sensor-height", type=int, default=260)
    p.add_argument("--stride", type=int, default=None,
                   help="keep every stride-th frame index")
    p.add_argument("--test-subjects", default=None, help="comma separated, e.g. 9,11")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("report", help="records jsonl -> csv/jsonl/svg report")
    p.add_argument("--records", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "jsonl", "svg"), default=None)
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        # single-threaded BLAS keeps reruns byte-identical
        with threadpool_limits(limits=1):
            args.func(args)
    except ConfigError as err:
        print(f"evpose: configuration error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"evpose: i/o error: {err}", file=sys.stderr)
        return 3
    except EvposeError as err:
        print(f"evpose: invalid data: {err}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
