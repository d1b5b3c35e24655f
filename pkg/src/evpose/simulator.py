"""Event simulation from intensity frame sequences.

Log intensity is assumed to move linearly between consecutive frames. A
pixel emits an event each time the log signal crosses one contrast step
(cp up, cn down) away from its reference level; the reference then jumps
to the crossed level. Crossing times are interpolated on the segment,
rounded to whole microseconds, and events closer than the refractory
period to the pixel's previous emission are dropped (the reference still
advances, matching a sensor that saturates its firing rate).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from PIL import Image

from . import _kernels
from .config import RunConfig
from .errors import EmptyDatasetError, FormatError, OrderError, OutOfRangeError, ShapeMismatchError
from .events_io import EventStream


@dataclass(frozen=True)
class SimulatorConfig:
    cp: float = 0.2
    cn: float = 0.2
    log_eps: float = 1e-3
    refractory: float = 1e-4  # seconds

    def __post_init__(self):
        if self.cp <= 0 or self.cn <= 0:
            raise OutOfRangeError("contrast thresholds must be positive")
        if self.log_eps <= 0:
            raise OutOfRangeError("log_eps must be positive")
        if self.refractory < 0:
            raise OutOfRangeError("refractory must be non-negative")

    @classmethod
    def from_run_config(cls, cfg: RunConfig) -> "SimulatorConfig":
        return cls(cp=cfg.cp, cn=cfg.cn, log_eps=cfg.log_eps, refractory=cfg.refractory)

    @property
    def refractory_us(self) -> int:
        return int(round(self.refractory * 1e6))


class IntensityFrame(NamedTuple):
    """One rendered frame: timestamp in microseconds, values in [0, 1]."""

    t: int
    values: np.ndarray


@dataclass
class SimulatorState:
    """Per-pixel reference log level and last emission time (-1 = never)."""

    ref: np.ndarray  # (H, W) float64
    last_t: np.ndarray  # (H, W) int64

    @classmethod
    def initial(cls, log_frame: np.ndarray) -> "SimulatorState":
        log_frame = np.ascontiguousarray(log_frame, dtype=np.float64)
        return cls(
            ref=log_frame.copy(),
            last_t=np.full(log_frame.shape, -1, dtype=np.int64),
        )


def log_transform(values: np.ndarray, log_eps: float) -> np.ndarray:
    """Map linear intensity to the log domain the thresholds live in."""
    values = np.asarray(values, dtype=np.float64)
    if not np.isfinite(values).all():
        raise OutOfRangeError("non-finite intensity value")
    if values.min(initial=0.0) < 0.0:
        raise OutOfRangeError("negative intensity value")
    return np.log(values + log_eps)


def _check_pair(a: np.ndarray, b: np.ndarray, state: SimulatorState, t0: int, t1: int):
    if a.shape != b.shape or a.ndim != 2:
        raise ShapeMismatchError(f"frame shapes differ: {a.shape} vs {b.shape}")
    if state.ref.shape != a.shape:
        raise ShapeMismatchError(
            f"state shape {state.ref.shape} does not match frames {a.shape}"
        )
    if t1 <= t0:
        raise OrderError(f"frame timestamps must increase: {t0} then {t1}")


def simulate_log_pair(
    log0: np.ndarray,
    log1: np.ndarray,
    t0_us: int,
    t1_us: int,
    state: SimulatorState,
    config: SimulatorConfig,
) -> EventStream:
    """Simulate one segment given log-domain frames; mutates ``state``.

    The reference levels in ``state`` must describe the signal at ``t0_us``
    (start from ``SimulatorState.initial(log0)`` for a fresh pixel array).
    """
    log0 = np.ascontiguousarray(log0, dtype=np.float64)
    log1 = np.ascontiguousarray(log1, dtype=np.float64)
    _check_pair(log0, log1, state, t0_us, t1_us)
    xs, ys, ts, ps = _kernels.simulate_pair_kernel(
        log0,
        log1,
        int(t0_us),
        int(t1_us),
        state.ref,
        state.last_t,
        float(config.cp),
        float(config.cn),
        config.refractory_us,
    )
    order = np.lexsort((ps, xs, ys, ts))
    h, w = log0.shape
    return EventStream(w, h, xs[order], ys[order], ts[order], ps[order])


def simulate_pair(
    frame0: IntensityFrame,
    frame1: IntensityFrame,
    state: SimulatorState,
    config: SimulatorConfig,
) -> EventStream:
    log0 = log_transform(frame0.values, config.log_eps)
    log1 = log_transform(frame1.values, config.log_eps)
    return simulate_log_pair(log0, log1, frame0.t, frame1.t, state, config)


def simulate_sequence(frames: Sequence[IntensityFrame], config: SimulatorConfig) -> EventStream:
    """Run the simulator over a whole frame sequence.

    Returns one stream sorted by (t, y, x, p). A single frame yields an
    empty stream; an empty sequence is an error because the sensor size
    is unknown.
    """
    frames = list(frames)
    if not frames:
        raise EmptyDatasetError("no frames to simulate")
    logs = [log_transform(f.values, config.log_eps) for f in frames]
    state = SimulatorState.initial(logs[0])
    h, w = logs[0].shape
    parts = []
    for i in range(len(frames) - 1):
        seg = simulate_log_pair(
            logs[i], logs[i + 1], frames[i].t, frames[i + 1].t, state, config
        )
        parts.append(seg)
    if not parts:
        return EventStream.empty(w, h)
    xs = np.concatenate([s.x for s in parts])
    ys = np.concatenate([s.y for s in parts])
    ts = np.concatenate([s.t for s in parts])
    ps = np.concatenate([s.p for s in parts])
    order = np.lexsort((ps, xs, ys, ts))
    return EventStream(w, h, xs[order], ys[order], ts[order], ps[order]).validate()


def load_frame_dir(path: str | Path) -> list[IntensityFrame]:
    """Load a directory of grayscale frames named ``<microseconds>.pgm``.

    8-bit images scale by 1/255, 16-bit by 1/65535. PNG is accepted with
    the same naming rule. Timestamps must be unique.
    """
    path = Path(path)
    files = sorted(
        [p for p in path.iterdir() if p.suffix.lower() in (".pgm", ".png")],
        key=lambda p: p.name,
    )
    if not files:
        raise EmptyDatasetError(f"no frames in {path}")
    frames = []
    for p in files:
        try:
            t = int(p.stem)
        except ValueError:
            raise FormatError(f"frame name is not a microsecond timestamp: {p.name}") from None
        with Image.open(p) as img:
            arr = np.asarray(img)
        if arr.ndim != 2:
            raise FormatError(f"not a grayscale image: {p.name}")
        if arr.dtype == np.uint8:
            values = arr.astype(np.float64) / 255.0
        elif arr.dtype in (np.uint16, np.int32):
            values = arr.astype(np.float64) / 65535.0
        else:
            raise FormatError(f"unsupported pixel type {arr.dtype} in {p.name}")
        frames.append(IntensityFrame(t, values))
    frames.sort(key=lambda f: f.t)
    for a, b in zip(frames, frames[1:]):
        if b.t <= a.t:
            raise OrderError(f"duplicate or reversed frame timestamp {b.t}")
    return frames
