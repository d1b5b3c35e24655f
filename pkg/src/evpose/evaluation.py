"""Scoring predicted poses: MPJPE, evaluation protocols, movement reports.

The headline number aggregates in two steps: each movement gets the mean
error over its evaluated frames, then the overall figure is the unweighted
mean of those movement means, with a population standard deviation across
them. Reports state this so the aggregation cannot be misread.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    AllMaskedError,
    ConfigError,
    EmptyReportError,
    FormatError,
    OutOfRangeError,
    OverlapError,
)
from .events_io import CameraCalibration, SkeletonSample, interpolate_joints
from .geometry import NdcPose, NormalizationContext, camera_from_ndc, world_to_camera
from .joints import HEAD

H36M_TRAIN_SUBJECTS = frozenset({1, 5, 6, 7, 8})
H36M_TEST_SUBJECTS = frozenset({9, 11})


def mpjpe(pred: np.ndarray, gt: np.ndarray, valid: np.ndarray | None = None) -> float:
    """Mean Euclidean joint error; units follow the inputs."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 2 or pred.shape[1] != 3:
        raise OutOfRangeError(f"pose shapes must match as (J, 3), got {pred.shape} vs {gt.shape}")
    d = np.linalg.norm(pred - gt, axis=1)
    if valid is not None:
        valid = np.asarray(valid, dtype=bool)
        if not valid.any():
            raise AllMaskedError("no valid joints to score")
        d = d[valid]
    return float(d.mean())


class FrameRef(NamedTuple):
    """Identity of one evaluated frame within a recording."""

    subject_id: int
    movement_label: str
    camera_id: int
    frame_index: int


@dataclass(frozen=True)
class ProtocolConfig:
    """Which subjects are scored and how frames are subsampled."""

    train_subjects: frozenset
    test_subjects: frozenset
    frame_stride: int = 64

    def __post_init__(self):
        object.__setattr__(self, "train_subjects", frozenset(self.train_subjects))
        object.__setattr__(self, "test_subjects", frozenset(self.test_subjects))
        overlap = self.train_subjects & self.test_subjects
        if overlap:
            raise OverlapError(f"subjects in both splits: {sorted(overlap)}")
        if not self.test_subjects:
            raise ConfigError("test_subjects is empty")
        if self.frame_stride < 1:
            raise ConfigError("frame_stride must be at least 1")


def apply_protocol(refs: Sequence[FrameRef], protocol: ProtocolConfig) -> list[FrameRef]:
    """Keep test-subject frames whose index is a stride multiple."""
    return [
        r
        for r in refs
        if r.subject_id in protocol.test_subjects and r.frame_index % protocol.frame_stride == 0
    ]


class EvalRecord(NamedTuple):
    subject_id: int
    movement_label: str
    camera_id: int
    frame_index: int
    error_mm: float

    @property
    def ref(self) -> FrameRef:
        return FrameRef(self.subject_id, self.movement_label, self.camera_id, self.frame_index)


def evaluate_poses(
    preds: Sequence[tuple[int, NdcPose]],
    gt_samples: Sequence[SkeletonSample],
    calibration: CameraCalibration,
    sensor_width: int,
    sensor_height: int,
    depth_half_extent: float = 1000.0,
) -> list[EvalRecord]:
    """Score timestamped cube-space predictions against world ground truth.

    Each prediction is denormalized with a context anchored on the ground
    truth head depth at that instant, then compared joint-wise in camera
    millimeters over the prediction's valid joints.
    """
    records = []
    for index, (t, pose) in enumerate(preds):
        gt = interpolate_joints(gt_samples, t)
        cam = world_to_camera(gt.joints, calibration)
        ctx = NormalizationContext(
            calibration,
            sensor_width,
            sensor_height,
            z_ref=float(cam[HEAD, 2]),
            depth_half_extent=depth_half_extent,
        )
        pred_cam = camera_from_ndc(pose, ctx)
        err = mpjpe(pred_cam.positions, cam, pred_cam.valid)
        records.append(
            EvalRecord(gt.subject_id, gt.movement_label, gt.camera_id, index, err)
        )
    return records


# ---------------------------------------------------------------------------
# aggregation


class MovementRow(NamedTuple):
    movement: str
    count: int
    mean_mm: float


@dataclass(frozen=True)
class PerMovementReport:
    rows: tuple[MovementRow, ...]  # sorted by movement label
    mean_mm: float  # unweighted mean of the row means
    std_mm: float  # population std of the row means


def per_movement_report(records: Sequence[EvalRecord]) -> PerMovementReport:
    if not records:
        raise EmptyReportError("no evaluation records")
    groups: dict[str, list[float]] = {}
    for rec in records:
        groups.setdefault(rec.movement_label, []).append(rec.error_mm)
    rows = tuple(
        MovementRow(name, len(errs), float(np.mean(errs)))
        for name, errs in sorted(groups.items())
    )
    means = np.array([r.mean_mm for r in rows])
    return PerMovementReport(rows, float(means.mean()), float(means.std()))


# ---------------------------------------------------------------------------
# record and report files

_BANNER = "aggregate = unweighted mean of movement means; std = population"


def write_records(records: Sequence[EvalRecord], path: str | Path) -> None:
    lines = [
        json.dumps(
            {
                "subject": r.subject_id,
                "movement": r.movement_label,
                "camera": r.camera_id,
                "frame": r.frame_index,
                "error_mm": r.error_mm,
            },
            sort_keys=True,
        )
        for r in records
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_records(path: str | Path) -> list[EvalRecord]:
    path = Path(path)
    records = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            records.append(
                EvalRecord(
                    int(obj["subject"]),
                    str(obj["movement"]),
                    int(obj["camera"]),
                    int(obj["frame"]),
                    float(obj["error_mm"]),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            raise FormatError("bad record", path=path, line=lineno) from None
    return records


def emit_report(report: PerMovementReport, path: str | Path, format: str) -> None:
    """Write a report as csv, jsonl, or svg; output is byte-reproducible."""
    path = Path(path)
    if format == "csv":
        lines = [f"# {_BANNER}", "movement,count,mean_mm"]
        lines += [f"{r.movement},{r.count},{r.mean_mm!r}" for r in report.rows]
        lines.append(f"MEAN,,{report.mean_mm!r}")
        lines.append(f"STD,,{report.std_mm!r}")
        path.write_text("\n".join(lines) + "\n")
    elif format == "jsonl":
        lines = [
            json.dumps({"movement": r.movement, "count": r.count, "mean_mm": r.mean_mm},
                       sort_keys=True)
            for r in report.rows
        ]
        lines.append(
            json.dumps(
                {"aggregate": _BANNER, "mean_mm": report.mean_mm, "std_mm": report.std_mm},
                sort_keys=True,
            )
        )
        path.write_text("\n".join(lines) + "\n")
    elif format == "svg":
        path.write_text(_report_svg(report))
    else:
        raise ConfigError(f"unknown report format {format!r}")


def _report_svg(report: PerMovementReport) -> str:
    """A small fixed-layout bar chart with no library baggage."""
    bar_w = 28
    gap = 12
    left = 60
    top = 30
    chart_h = 200
    width = left + len(report.rows) * (bar_w + gap) + 20
    height = top + chart_h + 70
    vmax = max(max((r.mean_mm for r in report.rows), default=1.0), 1e-9)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{left}" y="18" font-size="12">mean error per movement (mm); {_BANNER}</text>',
    ]
    for i, row in enumerate(report.rows):
        h = row.mean_mm / vmax * chart_h
        x = left + i * (bar_w + gap)
        y = top + chart_h - h
        parts.append(
            f'<rect x="{x}" y="{y:.2f}" width="{bar_w}" height="{h:.2f}" fill="#4878a8"/>'
        )
        parts.append(
            f'<text x="{x}" y="{top + chart_h + 14}" font-size="9">{row.movement}</text>'
        )
        parts.append(
            f'<text x="{x}" y="{y - 4:.2f}" font-size="9">{row.mean_mm:.2f}</text>'
        )
    mean_y = top + chart_h - report.mean_mm / vmax * chart_h
    parts.append(
        f'<line x1="{left}" y1="{mean_y:.2f}" x2="{width - 20}" y2="{mean_y:.2f}" '
        'stroke="#a84848" stroke-dasharray="4 3"/>'
    )
    parts.append(
        f'<text x="{left}" y="{top + chart_h + 34}" font-size="11">'
        f"mean {report.mean_mm:.4f} mm, std {report.std_mm:.4f} mm</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
