import numpy as np
import pytest

from evpose.events_io import CameraCalibration, EventStream


def make_stream(rng, n, width=32, height=24, t_max=100_000):
    """Random but valid stream: sorted times, in-bounds coords, +-1 polarity."""
    t = np.sort(rng.integers(0, t_max, n))
    x = rng.integers(0, width, n)
    y = rng.integers(0, height, n)
    p = rng.choice(np.array([-1, 1], dtype=np.int8), n)
    return EventStream(width, height, x, y, t, p).validate()


@pytest.fixture
def stream_factory():
    return make_stream


@pytest.fixture
def identity_calib():
    return CameraCalibration(346.0, 346.0, 173.0, 130.0, np.eye(3), np.zeros(3))


@pytest.fixture
def rotated_calib():
    # 90 degree turn about the camera z axis plus an offset
    rot = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    return CameraCalibration(100.0, 100.0, 50.0, 50.0, rot, np.array([10.0, -20.0, 30.0]))
