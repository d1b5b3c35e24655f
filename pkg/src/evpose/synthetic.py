"""Synthetic fixtures: a bright dot orbiting on a small sensor.

The dot's image position and a depth tied to its orbit phase give a fully
observable single-joint pose, so an affine readout of the event frame can
learn it. Used by the tests and the toy training walkthrough.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyDatasetError
from .geometry import NdcPose, render_heatmaps
from .lifting import FusedPose
from .representations import constant_count_frame, normalize_for_input, window_stream
from .simulator import IntensityFrame, SimulatorConfig, simulate_sequence
from .training import TrainingSample

FRAME_HW = 64
ORBIT_RADIUS_PX = 14.0
DOT_SIGMA_PX = 3.0
POSE_SCALE_PX = 20.0  # orbit radius 14 px -> |x|, |y| up to 0.7
DEPTH_AMPLITUDE = 0.5
PHASE_STEP = 0.35
FRAME_GAP_US = 10_000


def _dot_frame(cx: float, cy: float) -> np.ndarray:
    yy, xx = np.mgrid[0:FRAME_HW, 0:FRAME_HW].astype(np.float64)
    d2 = (xx - cx) ** 2 + (yy - cy) ** 2
    return 0.02 + 0.9 * np.exp(-d2 / (2.0 * DOT_SIGMA_PX**2))


def _dot_center(phase: float) -> tuple[float, float]:
    half = FRAME_HW / 2.0
    return (
        half + ORBIT_RADIUS_PX * np.cos(phase),
        half + ORBIT_RADIUS_PX * np.sin(phase),
    )


def dot_pose(phase: float) -> NdcPose:
    """Ground-truth single-joint pose for the dot at ``phase``."""
    cx, cy = _dot_center(phase)
    half = FRAME_HW / 2.0
    coords = np.array(
        [
            [
                (cx - half) / POSE_SCALE_PX,
                (cy - half) / POSE_SCALE_PX,
                DEPTH_AMPLITUDE * np.sin(phase),
            ]
        ]
    )
    return NdcPose(coords, np.array([True]))


def make_moving_dot_dataset(
    n_samples: int,
    seed: int,
    res: int = 32,
    sigma: float = 2.0,
    n_events: int = 512,
    count_mode: str = "unsigned-count",
) -> list[TrainingSample]:
    """Event-frame inputs paired with heatmap and pose targets.

    Each sample simulates the dot stepping once along its orbit, takes the
    first constant-count window of the stream, and labels it with the pose
    at the end of the step.
    """
    if n_samples <= 0:
        raise EmptyDatasetError("n_samples must be positive")
    rng = np.random.default_rng(seed)
    sim = SimulatorConfig()
    samples = []
    attempts = 0
    while len(samples) < n_samples:
        attempts += 1
        if attempts > 20 * n_samples:
            raise EmptyDatasetError(
                f"dot steps emit fewer than n_events={n_events} events; lower n_events"
            )
        phase = float(rng.uniform(0.0, 2.0 * np.pi))
        frames = [
            IntensityFrame(0, _dot_frame(*_dot_center(phase))),
            IntensityFrame(FRAME_GAP_US, _dot_frame(*_dot_center(phase + PHASE_STEP))),
        ]
        stream = simulate_sequence(frames, sim)
        windows = window_stream(stream, n_events)
        if not windows:
            continue  # not enough events; draw a fresh phase
        frame = constant_count_frame(windows[0].stream, count_mode)
        pose = dot_pose(phase + PHASE_STEP)
        samples.append(
            TrainingSample(
                normalize_for_input(frame),
                render_heatmaps(pose, res, sigma),
                pose,
            )
        )
    return samples


def dataset_mpjpe(model, samples, temperature: float = 1.0) -> float:
    """Mean per-joint position error of a model over samples, cube units."""
    from .evaluation import mpjpe
    from .lifting import predict_pose

    errs = []
    for sample in samples:
        fused: FusedPose = predict_pose(model.forward(sample.input), temperature)
        errs.append(mpjpe(fused.xyz, sample.pose.coords, sample.pose.valid))
    return float(np.mean(errs))
