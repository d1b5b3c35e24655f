"""Event-camera 3D human pose toolkit.

Pipeline: simulate or load event streams, aggregate them into network-ready
tensors, render marginal-heatmap ground truth from skeletons, lift heatmaps
back to 3D with a soft-argmax, and score predictions with per-movement MPJPE
reports. Hot kernels run through a compiled extension when available and a
pure NumPy fallback otherwise; both produce bit-identical results.
"""

from .config import RunConfig, load_config
from .errors import (
    AllMaskedError,
    ConfigError,
    EmptyDatasetError,
    EmptyReportError,
    EvposeError,
    FormatError,
    JointCountError,
    OrderError,
    OutOfRangeError,
    OverlapError,
    ShapeMismatchError,
)
from .events_io import (
    CameraCalibration,
    Event,
    EventStream,
    RecordingManifest,
    SkeletonSample,
    read_calibration,
    read_events,
    read_manifests,
    read_skeletons,
    write_calibration,
    write_events,
    write_skeletons,
)
from .joints import HEAD, JOINT_NAMES, NUM_JOINTS

__version__ = "0.1.0"

__all__ = [
    "AllMaskedError",
    "CameraCalibration",
    "ConfigError",
    "EmptyDatasetError",
    "EmptyReportError",
    "Event",
    "EventStream",
    "EvposeError",
    "FormatError",
    "HEAD",
    "JOINT_NAMES",
    "JointCountError",
    "NUM_JOINTS",
    "OrderError",
    "OutOfRangeError",
    "OverlapError",
    "RecordingManifest",
    "RunConfig",
    "ShapeMismatchError",
    "SkeletonSample",
    "__version__",
    "load_config",
    "read_calibration",
    "read_events",
    "read_manifests",
    "read_skeletons",
    "write_calibration",
    "write_events",
    "write_skeletons",
]
