"""Event, skeleton, and calibration data model plus every file format.

Binary event format (little-endian): 16-byte header = magic ``EVL1``,
sensor_width u16, sensor_height u16, event_count u64; then one 13-byte
record per event: x u16, y u16, t u64 (microseconds), p i8.

CSV event format: header line ``x,y,t,p``, one event per line.

Skeleton ground truth: CSV with header
``t,subject,movement,camera,j0x,j0y,j0z,...,j12x,j12y,j12z``
(timestamps in microseconds, coordinates in millimeters, joints in the
canonical order of :mod:`evpose.joints`).

Calibration: text file of ``key = value`` lines with keys fx, fy, cx, cy,
R (9 row-major values) and t (3 values, millimeters). ``#`` starts a comment.

Parsing is strict everywhere: a malformed record raises, it is never skipped.
"""

from __future__ import annotations

import bisect
import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import FormatError, JointCountError, OrderError, OutOfRangeError
from .joints import NUM_JOINTS

DEFAULT_SENSOR = (346, 260)  # DVS-style fixture default (width, height)

_MAGIC = b"EVL1"
_HEADER = struct.Struct("<4sHHQ")
EVENT_DTYPE = np.dtype([("x", "<u2"), ("y", "<u2"), ("t", "<u8"), ("p", "<i1")])
assert _HEADER.size == 16 and EVENT_DTYPE.itemsize == 13

_CSV_HEADER = "x,y,t,p"


class Event(NamedTuple):
    """One asynchronous brightness-change record."""

    x: int
    y: int
    t: int  # microseconds
    p: int  # -1 or +1


@dataclass(frozen=True)
class EventStream:
    """Time-ordered event sequence stored as column arrays.

    Arrays are int64 (int8 for polarity) and must satisfy: coordinates in
    sensor bounds, polarity in {-1, +1}, timestamps non-decreasing.
    """

    sensor_width: int
    sensor_height: int
    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "t"):
            arr = getattr(self, name)
            object.__setattr__(self, name, np.ascontiguousarray(arr, dtype=np.int64))
        object.__setattr__(self, "p", np.ascontiguousarray(self.p, dtype=np.int8))

    def __len__(self) -> int:
        return self.x.shape[0]

    def __getitem__(self, i: int) -> Event:
        return Event(int(self.x[i]), int(self.y[i]), int(self.t[i]), int(self.p[i]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.sensor_width == other.sensor_width
            and self.sensor_height == other.sensor_height
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.p, other.p)
        )

    def validate(self) -> "EventStream":
        """Check all stream invariants, raising on the first violation."""
        n = len(self)
        if not (self.y.shape[0] == self.t.shape[0] == self.p.shape[0] == n):
            raise FormatError("event column arrays differ in length")
        if n == 0:
            return self
        if self.x.min(initial=0) < 0 or self.x.max(initial=0) >= self.sensor_width:
            raise FormatError(f"x coordinate outside [0, {self.sensor_width})")
        if self.y.min(initial=0) < 0 or self.y.max(initial=0) >= self.sensor_height:
            raise FormatError(f"y coordinate outside [0, {self.sensor_height})")
        if not np.isin(self.p, (-1, 1)).all():
            raise FormatError("polarity outside {-1, +1}")
        if np.any(np.diff(self.t) < 0):
            i = int(np.argmax(np.diff(self.t) < 0)) + 1
            raise OrderError(f"timestamp decreases at event {i}")
        return self

    @classmethod
    def from_events(cls, events: Iterable[Event], sensor_width: int, sensor_height: int) -> "EventStream":
        rows = list(events)
        return cls(
            sensor_width,
            sensor_height,
            np.array([e.x for e in rows], dtype=np.int64),
            np.array([e.y for e in rows], dtype=np.int64),
            np.array([e.t for e in rows], dtype=np.int64),
            np.array([e.p for e in rows], dtype=np.int8),
        ).validate()

    @classmethod
    def empty(cls, sensor_width: int, sensor_height: int) -> "EventStream":
        z = np.zeros(0, dtype=np.int64)
        return cls(sensor_width, sensor_height, z, z, z, np.zeros(0, dtype=np.int8))


@dataclass(frozen=True)
class SkeletonSample:
    """One ground-truth skeleton: 13 joints in world millimeters at time t."""

    t: int  # microseconds
    subject_id: int
    movement_label: str
    camera_id: int
    joints: np.ndarray  # (13, 3) float64

    def __post_init__(self):
        joints = np.ascontiguousarray(self.joints, dtype=np.float64)
        if joints.shape != (NUM_JOINTS, 3):
            raise JointCountError(
                f"expected {NUM_JOINTS} joints x 3 coordinates, got shape {joints.shape}"
            )
        if not np.isfinite(joints).all():
            raise FormatError("non-finite joint coordinate")
        object.__setattr__(self, "joints", joints)


@dataclass(frozen=True)
class CameraCalibration:
    """Pinhole intrinsics plus world-to-camera rigid transform."""

    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray  # (3, 3) world -> camera
    tvec: np.ndarray  # (3,) millimeters

    def __post_init__(self):
        r = np.ascontiguousarray(self.rotation, dtype=np.float64)
        t = np.ascontiguousarray(self.tvec, dtype=np.float64)
        if r.shape != (3, 3) or t.shape != (3,):
            raise FormatError("calibration R must be 3x3 and t a 3-vector")
        if np.abs(r @ r.T - np.eye(3)).max() > 1e-6 or abs(np.linalg.det(r) - 1.0) > 1e-6:
            raise FormatError("R is not a proper rotation (orthonormal, det +1)")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "tvec", t)


@dataclass(frozen=True)
class RecordingManifest:
    """Paths and identity of one recording (events + ground truth + calibration)."""

    events_path: Path
    skeletons_path: Path
    calibration_path: Path
    subject_id: int
    movement_label: str
    camera_id: int

    def validate(self) -> "RecordingManifest":
        for p in (self.events_path, self.skeletons_path, self.calibration_path):
            if not Path(p).is_file():
                raise FormatError(f"referenced file missing: {p}")
        return self

    def load(self):
        """Read all three referenced files; raises if any fails to parse."""
        self.validate()
        return (
            read_events(self.events_path),
            read_skeletons(self.skeletons_path),
            read_calibration(self.calibration_path),
        )


# ---------------------------------------------------------------------------
# event file I/O


def _infer_format(path: Path, format: str | None) -> str:
    if format is not None:
        if format not in ("binary", "csv"):
            raise ValueError(f"unknown event format {format!r}")
        return format
    return "csv" if Path(path).suffix.lower() == ".csv" else "binary"


def read_events(
    path: str | Path,
    format: str | None = None,
    sensor_size: tuple[int, int] | None = None,
) -> EventStream:
    """Read an event file.

    ``format`` defaults to csv for ``.csv`` paths, binary otherwise. The
    binary header carries the sensor size; for csv it comes from
    ``sensor_size`` (default 346x260). A zero-byte file parses as an empty
    stream in either format.
    """
    path = Path(path)
    fmt = _infer_format(path, format)
    data = path.read_bytes()
    w, h = sensor_size if sensor_size is not None else DEFAULT_SENSOR
    if len(data) == 0:
        return EventStream.empty(w, h)
    if fmt == "binary":
        return _parse_binary(data, path)
    return _parse_csv(data, path, w, h)


def _parse_binary(data: bytes, path: Path) -> EventStream:
    if len(data) < _HEADER.size:
        raise FormatError("truncated header", path=path, offset=len(data))
    magic, w, h, count = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise FormatError(f"bad magic {magic!r}", path=path, offset=0)
    expected = _HEADER.size + count * EVENT_DTYPE.itemsize
    if len(data) != expected:
        raise FormatError(
            f"file length {len(data)} != header-implied {expected}",
            path=path,
            offset=len(data),
        )
    rec = np.frombuffer(data, dtype=EVENT_DTYPE, count=count, offset=_HEADER.size)
    stream = EventStream(
        w,
        h,
        rec["x"].astype(np.int64),
        rec["y"].astype(np.int64),
        rec["t"].astype(np.int64),
        rec["p"].astype(np.int8),
    )
    try:
        return stream.validate()
    except FormatError as err:
        raise type(err)(str(err), path=path) from None


def _parse_csv(data: bytes, path: Path, w: int, h: int) -> EventStream:
    lines = data.decode("ascii").splitlines()
    if lines[0].strip() != _CSV_HEADER:
        raise FormatError(f"expected header {_CSV_HEADER!r}", path=path, line=1)
    cols = [[], [], [], []]
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            raise FormatError("blank line", path=path, line=lineno)
        parts = line.split(",")
        if len(parts) != 4:
            raise FormatError(f"expected 4 fields, got {len(parts)}", path=path, line=lineno)
        try:
            vals = [int(part) for part in parts]
        except ValueError:
            raise FormatError(f"non-integer field in {line!r}", path=path, line=lineno) from None
        for c, v in zip(cols, vals):
            c.append(v)
    stream = EventStream(
        w,
        h,
        np.array(cols[0], dtype=np.int64),
        np.array(cols[1], dtype=np.int64),
        np.array(cols[2], dtype=np.int64),
        np.array(cols[3], dtype=np.int8) if all(v in (-1, 1) for v in cols[3]) else np.array(cols[3], dtype=np.int64),
    )
    try:
        return stream.validate()
    except FormatError as err:
        raise type(err)(str(err), path=path) from None


def write_events(stream: EventStream, path: str | Path, format: str | None = None) -> None:
    """Write a stream so that ``read_events`` round-trips it exactly."""
    path = Path(path)
    fmt = _infer_format(path, format)
    stream.validate()
    if fmt == "binary":
        if len(stream) and (stream.x.max() >= 1 << 16 or stream.y.max() >= 1 << 16 or stream.t.min() < 0):
            raise FormatError("coordinates or timestamps exceed the binary field widths")
        rec = np.empty(len(stream), dtype=EVENT_DTYPE)
        rec["x"] = stream.x
        rec["y"] = stream.y
        rec["t"] = stream.t
        rec["p"] = stream.p
        header = _HEADER.pack(_MAGIC, stream.sensor_width, stream.sensor_height, len(stream))
        path.write_bytes(header + rec.tobytes())
    else:
        rows = [_CSV_HEADER]
        rows.extend(
            f"{stream.x[i]},{stream.y[i]},{stream.t[i]},{stream.p[i]}" for i in range(len(stream))
        )
        path.write_text("\n".join(rows) + "\n", encoding="ascii")


# ---------------------------------------------------------------------------
# skeleton ground truth I/O

_SKELETON_FIELDS = ["t", "subject", "movement", "camera"] + [
    f"j{j}{axis}" for j in range(NUM_JOINTS) for axis in "xyz"
]


def read_skeletons(path: str | Path) -> list[SkeletonSample]:
    """Read ground-truth samples, returned sorted by timestamp."""
    path = Path(path)
    samples = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("missing header", path=path, line=1) from None
        if header != _SKELETON_FIELDS:
            raise FormatError(
                f"bad header; expected {','.join(_SKELETON_FIELDS[:6])},...",
                path=path,
                line=1,
            )
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(_SKELETON_FIELDS):
                raise FormatError(
                    f"expected {len(_SKELETON_FIELDS)} fields, got {len(row)}",
                    path=path,
                    line=lineno,
                )
            try:
                t = int(row[0])
                subject = int(row[1])
                camera = int(row[3])
                joints = np.array([float(v) for v in row[4:]], dtype=np.float64)
            except ValueError:
                raise FormatError("non-numeric field", path=path, line=lineno) from None
            try:
                samples.append(
                    SkeletonSample(t, subject, row[2], camera, joints.reshape(NUM_JOINTS, 3))
                )
            except FormatError as err:
                raise type(err)(str(err), path=path, line=lineno) from None
    samples.sort(key=lambda s: s.t)
    return samples


def write_skeletons(samples: Sequence[SkeletonSample], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_SKELETON_FIELDS)
        for s in samples:
            writer.writerow(
                [s.t, s.subject_id, s.movement_label, s.camera_id]
                + [repr(float(v)) for v in s.joints.ravel()]
            )


def interpolate_joints(samples: Sequence[SkeletonSample], t_query: int) -> SkeletonSample:
    """Linearly interpolate the skeleton at ``t_query`` microseconds.

    Exact at sample timestamps; affine between adjacent samples. ``samples``
    must be non-empty and time-sorted (as ``read_skeletons`` returns them).
    """
    if not samples:
        raise OutOfRangeError("no ground-truth samples")
    times = [s.t for s in samples]
    if t_query < times[0] or t_query > times[-1]:
        raise OutOfRangeError(
            f"t={t_query} outside ground-truth span [{times[0]}, {times[-1]}]"
        )
    i = bisect.bisect_left(times, t_query)
    if times[i] == t_query:
        return samples[i]
    lo, hi = samples[i - 1], samples[i]
    if hi.t == lo.t:
        return lo
    alpha = (t_query - lo.t) / (hi.t - lo.t)
    joints = lo.joints + (hi.joints - lo.joints) * alpha
    return SkeletonSample(t_query, lo.subject_id, lo.movement_label, lo.camera_id, joints)


# ---------------------------------------------------------------------------
# calibration I/O

_CALIB_KEYS = {"fx": 1, "fy": 1, "cx": 1, "cy": 1, "R": 9, "t": 3}


def read_calibration(path: str | Path) -> CameraCalibration:
    path = Path(path)
    values: dict[str, list[float]] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError("expected 'key = value'", path=path, line=lineno)
            key, _, rhs = line.partition("=")
            key = key.strip()
            if key not in _CALIB_KEYS:
                raise FormatError(f"unknown key {key!r}", path=path, line=lineno)
            if key in values:
                raise FormatError(f"duplicate key {key!r}", path=path, line=lineno)
            try:
                nums = [float(v) for v in rhs.split()]
            except ValueError:
                raise FormatError("non-numeric value", path=path, line=lineno) from None
            if len(nums) != _CALIB_KEYS[key]:
                raise FormatError(
                    f"{key} needs {_CALIB_KEYS[key]} value(s), got {len(nums)}",
                    path=path,
                    line=lineno,
                )
            values[key] = nums
    missing = sorted(set(_CALIB_KEYS) - set(values))
    if missing:
        raise FormatError(f"missing keys: {', '.join(missing)}", path=path)
    try:
        return CameraCalibration(
            fx=values["fx"][0],
            fy=values["fy"][0],
            cx=values["cx"][0],
            cy=values["cy"][0],
            rotation=np.array(values["R"], dtype=np.float64).reshape(3, 3),
            tvec=np.array(values["t"], dtype=np.float64),
        )
    except FormatError as err:
        raise type(err)(str(err), path=path) from None


def write_calibration(calib: CameraCalibration, path: str | Path) -> None:
    lines = [
        f"fx = {calib.fx!r}",
        f"fy = {calib.fy!r}",
        f"cx = {calib.cx!r}",
        f"cy = {calib.cy!r}",
        "R = " + " ".join(repr(float(v)) for v in calib.rotation.ravel()),
        "t = " + " ".join(repr(float(v)) for v in calib.tvec),
    ]
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# manifests


def read_manifests(path: str | Path) -> list[RecordingManifest]:
    """Read a JSON list of recording manifests; relative paths resolve against the file."""
    path = Path(path)
    try:
        entries = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise FormatError(f"invalid JSON: {err}", path=path) from None
    if not isinstance(entries, list):
        raise FormatError("manifest file must hold a JSON list", path=path)
    base = path.parent
    manifests = []
    for i, entry in enumerate(entries):
        try:
            manifests.append(
                RecordingManifest(
                    events_path=base / entry["events"],
                    skeletons_path=base / entry["skeletons"],
                    calibration_path=base / entry["calibration"],
                    subject_id=int(entry["subject"]),
                    movement_label=str(entry["movement"]),
                    camera_id=int(entry["camera"]),
                )
            )
        except (KeyError, TypeError, ValueError) as err:
            raise FormatError(f"manifest entry {i}: {err}", path=path) from None
    return manifests
