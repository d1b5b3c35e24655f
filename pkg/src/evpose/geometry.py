"""Skeleton geometry: camera transforms, NDC normalization, heatmap targets.

Poses live in a normalized device cube [-1, 1]^3. x and y come from the
pinhole projection scaled to sensor extent; z is camera depth relative to a
per-sample reference depth, divided by a half extent in millimeters. Joints
that land outside the cube (or behind the camera) are masked invalid, never
clamped, so downstream losses can skip them honestly.

Ground-truth supervision is three marginal heatmaps per joint, one per face
of the cube: xy, xz, and zy. A face named "ab" uses coordinate a as the
horizontal axis and b as the vertical axis; plane arrays are indexed
[row = vertical, col = horizontal].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError, OutOfRangeError, ShapeMismatchError
from .events_io import CameraCalibration
from .joints import HEAD

FACE_NAMES = ("xy", "xz", "zy")
# face -> (horizontal ndc axis, vertical ndc axis), axes 0=x 1=y 2=z
FACE_AXES = {"xy": (0, 1), "xz": (0, 2), "zy": (2, 1)}


@dataclass(frozen=True)
class JointSet:
    """J joint positions with a validity mask; J is not fixed here."""

    positions: np.ndarray  # (J, 3) float64
    valid: np.ndarray  # (J,) bool

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=np.float64)
        valid = np.ascontiguousarray(self.valid, dtype=bool)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ShapeMismatchError(f"positions must be (J, 3), got {pos.shape}")
        if valid.shape != (pos.shape[0],):
            raise ShapeMismatchError(
                f"valid mask {valid.shape} does not match {pos.shape[0]} joints"
            )
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "valid", valid)

    @classmethod
    def all_valid(cls, positions: np.ndarray) -> "JointSet":
        positions = np.asarray(positions, dtype=np.float64)
        return cls(positions, np.ones(positions.shape[0], dtype=bool))

    def __len__(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class NdcPose:
    """Joint coordinates inside the normalized cube, invalid joints masked."""

    coords: np.ndarray  # (J, 3) float64
    valid: np.ndarray  # (J,) bool

    def __post_init__(self):
        coords = np.ascontiguousarray(self.coords, dtype=np.float64)
        valid = np.ascontiguousarray(self.valid, dtype=bool)
        if coords.ndim != 2 or coords.shape[1] != 3:
            raise ShapeMismatchError(f"coords must be (J, 3), got {coords.shape}")
        if valid.shape != (coords.shape[0],):
            raise ShapeMismatchError(
                f"valid mask {valid.shape} does not match {coords.shape[0]} joints"
            )
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "valid", valid)

    def __len__(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True)
class NormalizationContext:
    """Everything needed to map camera space to the cube and back."""

    calibration: CameraCalibration
    sensor_width: int
    sensor_height: int
    z_ref: float  # mm, depth mapped to z = 0
    depth_half_extent: float = 1000.0  # mm mapped to one unit of z

    def __post_init__(self):
        if self.sensor_width < 1 or self.sensor_height < 1:
            raise OutOfRangeError("sensor dimensions must be positive")
        if self.depth_half_extent <= 0:
            raise OutOfRangeError("depth_half_extent must be positive")

    @classmethod
    def for_skeleton(
        cls,
        calibration: CameraCalibration,
        sensor_width: int,
        sensor_height: int,
        joints_world: np.ndarray,
        depth_half_extent: float = 1000.0,
        anchor_joint: int = HEAD,
    ) -> "NormalizationContext":
        """Anchor the depth window on one joint (the head by default)."""
        cam = world_to_camera(np.asarray(joints_world, dtype=np.float64), calibration)
        return cls(
            calibration,
            sensor_width,
            sensor_height,
            z_ref=float(cam[anchor_joint, 2]),
            depth_half_extent=depth_half_extent,
        )


def world_to_camera(points: np.ndarray, calib: CameraCalibration) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    return points @ calib.rotation.T + calib.tvec


def camera_to_world(points: np.ndarray, calib: CameraCalibration) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    return (points - calib.tvec) @ calib.rotation


def ndc_from_camera(joints: JointSet, ctx: NormalizationContext) -> NdcPose:
    """Normalize camera-space joints (mm) into the cube.

    A joint is valid only if it was valid coming in, sits in front of the
    camera, and lands inside [-1, 1] on all three axes.
    """
    pos = joints.positions
    z = pos[:, 2]
    in_front = z > 0.0
    safe_z = np.where(in_front, z, 1.0)
    calib = ctx.calibration
    u = calib.fx * pos[:, 0] / safe_z + calib.cx
    v = calib.fy * pos[:, 1] / safe_z + calib.cy
    coords = np.empty_like(pos)
    coords[:, 0] = 2.0 * u / ctx.sensor_width - 1.0
    coords[:, 1] = 2.0 * v / ctx.sensor_height - 1.0
    coords[:, 2] = (z - ctx.z_ref) / ctx.depth_half_extent
    inside = np.abs(coords).max(axis=1) <= 1.0
    return NdcPose(coords, joints.valid & in_front & inside)


def ndc_from_world(joints: JointSet, ctx: NormalizationContext) -> NdcPose:
    cam = world_to_camera(joints.positions, ctx.calibration)
    return ndc_from_camera(JointSet(cam, joints.valid), ctx)


def camera_from_ndc(pose: NdcPose, ctx: NormalizationContext) -> JointSet:
    """Invert the normalization back to camera-space millimeters."""
    coords = pose.coords
    calib = ctx.calibration
    z = coords[:, 2] * ctx.depth_half_extent + ctx.z_ref
    u = (coords[:, 0] + 1.0) * ctx.sensor_width / 2.0
    v = (coords[:, 1] + 1.0) * ctx.sensor_height / 2.0
    out = np.empty_like(coords)
    out[:, 0] = (u - calib.cx) * z / calib.fx
    out[:, 1] = (v - calib.cy) * z / calib.fy
    out[:, 2] = z
    return JointSet(out, pose.valid.copy())


# ---------------------------------------------------------------------------
# marginal heatmaps


@dataclass(frozen=True)
class MarginalHeatmaps:
    """Per-joint planes for the xy, xz, and zy cube faces.

    planes[j, f] is an (R, R) map for face FACE_NAMES[f]; invalid joints
    have all-zero planes.
    """

    planes: np.ndarray  # (J, 3, R, R) float64
    valid: np.ndarray  # (J,) bool

    def __post_init__(self):
        planes = np.ascontiguousarray(self.planes, dtype=np.float64)
        valid = np.ascontiguousarray(self.valid, dtype=bool)
        if planes.ndim != 4 or planes.shape[1] != 3 or planes.shape[2] != planes.shape[3]:
            raise ShapeMismatchError(f"planes must be (J, 3, R, R), got {planes.shape}")
        if valid.shape != (planes.shape[0],):
            raise ShapeMismatchError("valid mask does not match joint count")
        object.__setattr__(self, "planes", planes)
        object.__setattr__(self, "valid", valid)

    @property
    def res(self) -> int:
        return self.planes.shape[2]


def ndc_to_pixel(coord: np.ndarray | float, res: int) -> np.ndarray | float:
    """Map cube coordinate [-1, 1] to pixel position [0, res - 1]."""
    return (coord + 1.0) / 2.0 * (res - 1)


def pixel_to_ndc(pixel: np.ndarray | float, res: int) -> np.ndarray | float:
    return 2.0 * pixel / (res - 1) - 1.0


def _gaussian_1d(center: float, res: int, sigma: float) -> np.ndarray:
    idx = np.arange(res, dtype=np.float64)
    d = idx - center
    g = np.exp(-(d * d) / (2.0 * sigma * sigma))
    g[np.abs(d) > 4.0 * sigma] = 0.0
    return g


def render_plane(cu: float, cv: float, res: int, sigma: float) -> np.ndarray:
    """One (R, R) Gaussian at pixel center (cu, cv), truncated at 4 sigma.

    Normalized to sum 1 after truncation. If the footprint misses every
    cell (tiny sigma between grid points) the nearest cell gets all the mass.
    """
    g = np.outer(_gaussian_1d(cv, res, sigma), _gaussian_1d(cu, res, sigma))
    total = g.sum()
    if total == 0.0:
        g = np.zeros((res, res), dtype=np.float64)
        r = min(max(int(round(cv)), 0), res - 1)
        c = min(max(int(round(cu)), 0), res - 1)
        g[r, c] = 1.0
        return g
    return g / total


def render_heatmaps(pose: NdcPose, res: int, sigma: float) -> MarginalHeatmaps:
    """Render ground-truth marginal heatmaps for every valid joint."""
    if res < 2:
        raise OutOfRangeError("res must be at least 2")
    if sigma <= 0:
        raise OutOfRangeError("sigma must be positive")
    j = len(pose)
    planes = np.zeros((j, 3, res, res), dtype=np.float64)
    for ji in range(j):
        if not pose.valid[ji]:
            continue
        for fi, face in enumerate(FACE_NAMES):
            au, av = FACE_AXES[face]
            cu = ndc_to_pixel(pose.coords[ji, au], res)
            cv = ndc_to_pixel(pose.coords[ji, av], res)
            planes[ji, fi] = render_plane(cu, cv, res, sigma)
    return MarginalHeatmaps(planes, pose.valid.copy())


# ---------------------------------------------------------------------------
# NDC pose CSV


def _ndc_header(j: int) -> list[str]:
    cols = ["t"]
    for ji in range(j):
        cols += [f"j{ji}x", f"j{ji}y", f"j{ji}z", f"j{ji}v"]
    return cols


def write_ndc_csv(rows: Sequence[tuple[int, NdcPose]], path: str | Path) -> None:
    """Write (timestamp, pose) rows; all poses must share one joint count."""
    if not rows:
        raise FormatError("nothing to write")
    j = len(rows[0][1])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_ndc_header(j))
        for t, pose in rows:
            if len(pose) != j:
                raise ShapeMismatchError("joint count varies across rows")
            cells = [t]
            for ji in range(j):
                cells += [repr(float(c)) for c in pose.coords[ji]]
                cells.append(1 if pose.valid[ji] else 0)
            writer.writerow(cells)


def read_ndc_csv(path: str | Path) -> list[tuple[int, NdcPose]]:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("missing header", path=path, line=1) from None
        if len(header) < 5 or (len(header) - 1) % 4 != 0:
            raise FormatError("malformed header", path=path, line=1)
        j = (len(header) - 1) // 4
        if header != _ndc_header(j):
            raise FormatError("malformed header", path=path, line=1)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise FormatError(
                    f"expected {len(header)} fields, got {len(row)}", path=path, line=lineno
                )
            try:
                t = int(row[0])
                body = row[1:]
                coords = np.array(
                    [[float(body[4 * ji + a]) for a in range(3)] for ji in range(j)]
                )
                valid = np.array([int(body[4 * ji + 3]) != 0 for ji in range(j)])
            except ValueError:
                raise FormatError("non-numeric field", path=path, line=lineno) from None
            rows.append((t, NdcPose(coords, valid)))
    return rows
