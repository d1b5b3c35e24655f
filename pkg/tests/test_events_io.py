"""Event, skeleton, calibration, and manifest file formats."""

import json
import struct

import numpy as np
import pytest

from conftest import make_stream
from evpose.errors import FormatError, JointCountError, OrderError, OutOfRangeError
from evpose.events_io import (
    EVENT_DTYPE,
    CameraCalibration,
    Event,
    EventStream,
    RecordingManifest,
    SkeletonSample,
    interpolate_joints,
    read_calibration,
    read_events,
    read_manifests,
    read_skeletons,
    write_calibration,
    write_events,
    write_skeletons,
)
from evpose.joints import JOINT_NAMES, NUM_JOINTS


def test_joint_order_is_canonical():
    assert JOINT_NAMES == (
        "head",
        "shoulderR",
        "shoulderL",
        "elbowR",
        "elbowL",
        "hipR",
        "hipL",
        "handR",
        "handL",
        "kneeR",
        "kneeL",
        "footR",
        "footL",
    )
    assert NUM_JOINTS == 13


def test_binary_layout_matches_independent_packing(tmp_path):
    # oracle: build the expected bytes with struct, not with the writer
    events = [Event(3, 7, 1000, 1), Event(31, 0, 2000, -1)]
    stream = EventStream.from_events(events, 32, 24)
    expected = struct.pack("<4sHHQ", b"EVL1", 32, 24, 2)
    for e in events:
        expected += struct.pack("<HHQb", e.x, e.y, e.t, e.p)
    path = tmp_path / "events.bin"
    write_events(stream, path)
    assert path.read_bytes() == expected
    assert EVENT_DTYPE.itemsize == 13


def test_binary_round_trip_seeded(tmp_path):
    for seed in range(10):
        rng = np.random.default_rng(seed)
        stream = make_stream(rng, int(rng.integers(0, 500)))
        path = tmp_path / f"s{seed}.bin"
        write_events(stream, path)
        assert read_events(path) == stream


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    stream = make_stream(rng, 100)
    path = tmp_path / "events.csv"
    write_events(stream, path)
    assert path.read_text().splitlines()[0] == "x,y,t,p"
    got = read_events(path, sensor_size=(32, 24))
    assert got == stream


def test_format_inferred_from_suffix(tmp_path):
    rng = np.random.default_rng(6)
    stream = make_stream(rng, 20)
    write_events(stream, tmp_path / "a.csv")
    assert (tmp_path / "a.csv").read_text().startswith("x,y,t,p")
    write_events(stream, tmp_path / "a.evt")
    assert (tmp_path / "a.evt").read_bytes()[:4] == b"EVL1"


def test_zero_byte_file_is_empty_stream(tmp_path):
    for name in ("empty.bin", "empty.csv"):
        path = tmp_path / name
        path.write_bytes(b"")
        stream = read_events(path)
        assert len(stream) == 0
        assert (stream.sensor_width, stream.sensor_height) == (346, 260)


def test_binary_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(struct.pack("<4sHHQ", b"NOPE", 4, 4, 0))
    with pytest.raises(FormatError, match="magic"):
        read_events(path)


def test_binary_truncated_header(tmp_path):
    path = tmp_path / "short.bin"
    path.write_bytes(b"EVL1\x04")
    with pytest.raises(FormatError, match="truncated"):
        read_events(path)


def test_binary_length_mismatch(tmp_path):
    path = tmp_path / "len.bin"
    path.write_bytes(struct.pack("<4sHHQ", b"EVL1", 4, 4, 2) + b"\x00" * 13)
    with pytest.raises(FormatError, match="length"):
        read_events(path)


def test_csv_rejects_bad_rows(tmp_path):
    cases = {
        "head.csv": ("x,y,t,polarity\n1,1,1,1\n", "header"),
        "fields.csv": ("x,y,t,p\n1,2,3\n", "4 fields"),
        "alpha.csv": ("x,y,t,p\n1,2,three,1\n", "non-integer"),
        "blank.csv": ("x,y,t,p\n1,2,3,1\n\n4,5,6,-1\n", "blank"),
    }
    for name, (text, match) in cases.items():
        path = tmp_path / name
        path.write_text(text)
        with pytest.raises(FormatError, match=match):
            read_events(path)


def test_validation_catches_stream_violations(tmp_path):
    path = tmp_path / "v.csv"
    path.write_text("x,y,t,p\n40,2,3,1\n")
    with pytest.raises(FormatError, match="x coordinate"):
        read_events(path, sensor_size=(32, 24))
    path.write_text("x,y,t,p\n1,2,3,2\n")
    with pytest.raises(FormatError, match="polarity"):
        read_events(path, sensor_size=(32, 24))
    path.write_text("x,y,t,p\n1,2,30,1\n1,2,10,1\n")
    with pytest.raises(OrderError, match="decreases"):
        read_events(path, sensor_size=(32, 24))


def test_error_message_carries_location(tmp_path):
    path = tmp_path / "loc.csv"
    path.write_text("x,y,t,p\n1,2,3,1\n1,2,x,1\n")
    with pytest.raises(FormatError) as err:
        read_events(path)
    assert "loc.csv" in str(err.value)
    assert "line 3" in str(err.value)


def test_stream_indexing_and_equality(stream_factory):
    rng = np.random.default_rng(2)
    stream = stream_factory(rng, 10)
    e = stream[3]
    assert e == Event(int(stream.x[3]), int(stream.y[3]), int(stream.t[3]), int(stream.p[3]))
    other = EventStream(stream.sensor_width, stream.sensor_height,
                        stream.x, stream.y, stream.t, stream.p)
    assert stream == other
    assert stream != EventStream.empty(32, 24)


# ---------------------------------------------------------------------------
# skeletons


def _sample(t, subject=1, movement="walk", camera=2, base=0.0):
    joints = np.arange(NUM_JOINTS * 3, dtype=np.float64).reshape(NUM_JOINTS, 3) + base
    return SkeletonSample(t, subject, movement, camera, joints)


def test_skeleton_round_trip(tmp_path):
    samples = [_sample(0), _sample(1000, base=5.5), _sample(2000, base=-3.25)]
    path = tmp_path / "gt.csv"
    write_skeletons(samples, path)
    got = read_skeletons(path)
    assert len(got) == 3
    for a, b in zip(samples, got):
        assert a.t == b.t
        assert a.subject_id == b.subject_id
        assert a.movement_label == b.movement_label
        assert a.camera_id == b.camera_id
        assert np.array_equal(a.joints, b.joints)


def test_skeletons_returned_time_sorted(tmp_path):
    path = tmp_path / "gt.csv"
    write_skeletons([_sample(2000), _sample(0), _sample(1000)], path)
    assert [s.t for s in read_skeletons(path)] == [0, 1000, 2000]


def test_skeleton_rejects_wrong_joint_count():
    with pytest.raises(JointCountError):
        SkeletonSample(0, 1, "walk", 0, np.zeros((NUM_JOINTS - 1, 3)))


def test_skeleton_rejects_non_finite():
    joints = np.zeros((NUM_JOINTS, 3))
    joints[4, 1] = np.nan
    with pytest.raises(FormatError, match="finite"):
        SkeletonSample(0, 1, "walk", 0, joints)


def test_skeleton_bad_header_and_fields(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,subject\n")
    with pytest.raises(FormatError, match="header"):
        read_skeletons(path)
    write_skeletons([_sample(0)], path)
    lines = path.read_text().splitlines()
    lines[1] = lines[1].replace("walk", "walk").rsplit(",", 1)[0]  # drop one field
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(FormatError, match="fields"):
        read_skeletons(path)


def test_interpolate_joints_exact_and_midpoint():
    a, b = _sample(1000, base=0.0), _sample(3000, base=10.0)
    assert interpolate_joints([a, b], 1000) is a
    mid = interpolate_joints([a, b], 2000)
    # oracle: affine midpoint is the elementwise average
    assert np.allclose(mid.joints, (a.joints + b.joints) / 2.0, rtol=0, atol=1e-12)
    assert mid.t == 2000
    quarter = interpolate_joints([a, b], 1500)
    assert np.allclose(quarter.joints, a.joints + 0.25 * (b.joints - a.joints), atol=1e-12)


def test_interpolate_out_of_span():
    a, b = _sample(1000), _sample(3000)
    with pytest.raises(OutOfRangeError):
        interpolate_joints([a, b], 999)
    with pytest.raises(OutOfRangeError):
        interpolate_joints([a, b], 3001)
    with pytest.raises(OutOfRangeError):
        interpolate_joints([], 0)


# ---------------------------------------------------------------------------
# calibration


def test_calibration_round_trip(tmp_path, rotated_calib):
    path = tmp_path / "calib.txt"
    write_calibration(rotated_calib, path)
    got = read_calibration(path)
    assert got.fx == rotated_calib.fx
    assert np.array_equal(got.rotation, rotated_calib.rotation)
    assert np.array_equal(got.tvec, rotated_calib.tvec)


def test_calibration_comments_and_errors(tmp_path):
    path = tmp_path / "calib.txt"
    path.write_text(
        "# fixture\nfx = 100.0\nfy = 100.0\ncx = 50.0  # center\ncy = 50.0\n"
        "R = 1 0 0 0 1 0 0 0 1\nt = 0 0 0\n"
    )
    calib = read_calibration(path)
    assert calib.cx == 50.0

    path.write_text("fx = 100\n")
    with pytest.raises(FormatError, match="missing keys"):
        read_calibration(path)

    path.write_text("fx = 1\nfx = 2\n")
    with pytest.raises(FormatError, match="duplicate"):
        read_calibration(path)

    path.write_text("zoom = 3\n")
    with pytest.raises(FormatError, match="unknown key"):
        read_calibration(path)

    path.write_text(
        "fx = 100\nfy = 100\ncx = 50\ncy = 50\nR = 2 0 0 0 1 0 0 0 1\nt = 0 0 0\n"
    )
    with pytest.raises(FormatError, match="rotation"):
        read_calibration(path)


def test_calibration_rejects_wrong_value_counts(tmp_path):
    path = tmp_path / "calib.txt"
    path.write_text("R = 1 0 0\n")
    with pytest.raises(FormatError, match="9 value"):
        read_calibration(path)


# ---------------------------------------------------------------------------
# manifests


def test_manifest_round_trip_and_load(tmp_path, identity_calib):
    rng = np.random.default_rng(3)
    stream = make_stream(rng, 50)
    write_events(stream, tmp_path / "rec.bin")
    write_skeletons([_sample(0), _sample(50_000)], tmp_path / "rec_gt.csv")
    write_calibration(identity_calib, tmp_path / "rec_calib.txt")
    manifest_path = tmp_path / "manifest.json"
    manifest_path.write_text(
        json.dumps(
            [
                {
                    "events": "rec.bin",
                    "skeletons": "rec_gt.csv",
                    "calibration": "rec_calib.txt",
                    "subject": 9,
                    "movement": "walk",
                    "camera": 2,
                }
            ]
        )
    )
    manifests = read_manifests(manifest_path)
    assert len(manifests) == 1
    m = manifests[0]
    assert (m.subject_id, m.movement_label, m.camera_id) == (9, "walk", 2)
    events, skeletons, calib = m.load()
    assert events == stream
    assert len(skeletons) == 2
    assert calib.fx == identity_calib.fx


def test_manifest_missing_file_and_bad_json(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text("{not json")
    with pytest.raises(FormatError, match="JSON"):
        read_manifests(path)
    path.write_text(json.dumps([{"events": "nope.bin"}]))
    with pytest.raises(FormatError, match="entry 0"):
        read_manifests(path)
    path.write_text(
        json.dumps(
            [
                {
                    "events": "gone.bin",
                    "skeletons": "gone.csv",
                    "calibration": "gone.txt",
                    "subject": 1,
                    "movement": "walk",
                    "camera": 0,
                }
            ]
        )
    )
    with pytest.raises(FormatError, match="missing"):
        read_manifests(path)[0].validate()
