"""Hot-kernel backend selection.

The compiled extension is preferred; the NumPy fallback is used when the
extension is absent or when ``EVPOSE_PURE_PYTHON`` is set to a non-empty
value other than ``0``. Both backends evaluate the same floating-point
expressions in the same order, so results are bit-identical.
"""

import os

if os.environ.get("EVPOSE_PURE_PYTHON", "") not in ("", "0"):
    from . import _numpy as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _numpy as _impl

        BACKEND = "numpy"

simulate_pair_kernel = _impl.simulate_pair_kernel
accumulate_count = _impl.accumulate_count
accumulate_voxel = _impl.accumulate_voxel

__all__ = ["BACKEND", "simulate_pair_kernel", "accumulate_count", "accumulate_voxel"]
