"""Aggregating event streams into dense tensors.

Two representations: constant-count frames (every window holds the same
number of events, so integration time adapts to scene activity) and voxel
grids (each window's events spread over temporal bins with a two-tap tent
kernel). Polarity handling is shared by both through ``count_mode``.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .config import COUNT_MODES
from .errors import OutOfRangeError, ShapeMismatchError
from .events_io import EventStream

_MODE_CODE = {name: i for i, name in enumerate(COUNT_MODES)}


class EventWindow(NamedTuple):
    """One slice of a stream: its events plus ordinal and time span."""

    stream: EventStream
    index: int
    t_start: int
    t_end: int


def window_stream(stream: EventStream, n_events: int) -> list[EventWindow]:
    """Chop a stream into consecutive windows of exactly ``n_events`` events.

    The trailing remainder of fewer than ``n_events`` events is discarded,
    so every window aggregates the same event count.
    """
    if n_events <= 0:
        raise OutOfRangeError("n_events must be positive")
    count = len(stream) // n_events
    windows = []
    for i in range(count):
        lo = i * n_events
        hi = lo + n_events
        sub = EventStream(
            stream.sensor_width,
            stream.sensor_height,
            stream.x[lo:hi],
            stream.y[lo:hi],
            stream.t[lo:hi],
            stream.p[lo:hi],
        )
        windows.append(EventWindow(sub, i, int(sub.t[0]), int(sub.t[-1])))
    return windows


def _mode_code(count_mode: str) -> int:
    try:
        return _MODE_CODE[count_mode]
    except KeyError:
        raise OutOfRangeError(
            f"count_mode must be one of {', '.join(COUNT_MODES)}; got {count_mode!r}"
        ) from None


def constant_count_frame(stream: EventStream, count_mode: str = "unsigned-count") -> np.ndarray:
    """Collapse a window's events into per-pixel counts, shape (C, H, W).

    C is 1 except for per-polarity mode (positive plane, then negative).
    """
    code = _mode_code(count_mode)
    return _kernels.accumulate_count(
        stream.x, stream.y, stream.p, stream.sensor_width, stream.sensor_height, code
    )


def voxel_grid(stream: EventStream, bins: int, count_mode: str = "unsigned-count") -> np.ndarray:
    """Spread a window's events over ``bins`` temporal slices, shape (C, B, H, W).

    Event k maps to normalized time (B - 1)(t_k - t_first)/(t_last - t_first)
    and deposits a two-tap tent into the bracketing bins; the taps always sum
    to exactly one unit of the event's weight. A window whose events share
    one timestamp puts everything in bin 0.
    """
    if bins < 2:
        raise OutOfRangeError("bins must be at least 2")
    code = _mode_code(count_mode)
    if len(stream) == 0:
        t0 = tn = 0
    else:
        t0 = int(stream.t[0])
        tn = int(stream.t[-1])
    return _kernels.accumulate_voxel(
        stream.x,
        stream.y,
        stream.t,
        stream.p,
        t0,
        tn,
        stream.sensor_width,
        stream.sensor_height,
        bins,
        code,
    )


def flatten_voxel(grid: np.ndarray) -> np.ndarray:
    """Merge the (channel, bin) axes of a voxel grid into network channels."""
    if grid.ndim != 4:
        raise ShapeMismatchError(f"expected (C, B, H, W) voxel grid, got shape {grid.shape}")
    c, b, h, w = grid.shape
    return grid.reshape(c * b, h, w)


def normalize_for_input(tensor: np.ndarray, norm_max: float | None = None) -> np.ndarray:
    """Scale a tensor into [-1, 1] by its largest magnitude.

    Pass ``norm_max`` to share one scale across a dataset. An all-zero
    tensor comes back unchanged.
    """
    tensor = np.asarray(tensor, dtype=np.float64)
    m = float(np.abs(tensor).max()) if norm_max is None else float(norm_max)
    if m < 0:
        raise OutOfRangeError("norm_max must be non-negative")
    if m == 0.0:
        return tensor.copy()
    return tensor / m


def aggregate_windows(
    windows: Sequence[EventWindow],
    representation: str,
    bins: int = 4,
    count_mode: str = "unsigned-count",
) -> list[np.ndarray]:
    """Apply one representation to every window.

    ``representation`` is ``constant-count`` or ``voxel``; voxel tensors are
    flattened to (C * B, H, W) so both paths yield network-shaped arrays.
    """
    if representation == "constant-count":
        return [constant_count_frame(w.stream, count_mode) for w in windows]
    if representation == "voxel":
        return [flatten_voxel(voxel_grid(w.stream, bins, count_mode)) for w in windows]
    raise OutOfRangeError(
        f"representation must be constant-count or voxel, got {representation!r}"
    )
