"""Camera transforms, cube normalization, and heatmap rendering."""

import math

import numpy as np
import pytest

from evpose.errors import FormatError, OutOfRangeError, ShapeMismatchError
from evpose.geometry import (
    FACE_AXES,
    FACE_NAMES,
    JointSet,
    MarginalHeatmaps,
    NdcPose,
    NormalizationContext,
    camera_from_ndc,
    camera_to_world,
    ndc_from_camera,
    ndc_from_world,
    ndc_to_pixel,
    pixel_to_ndc,
    read_ndc_csv,
    render_heatmaps,
    render_plane,
    world_to_camera,
    write_ndc_csv,
)
from evpose.joints import HEAD


def small_ctx(identity_calib=None, z_ref=1000.0, half=500.0):
    from evpose.events_io import CameraCalibration

    calib = CameraCalibration(100.0, 100.0, 50.0, 50.0, np.eye(3), np.zeros(3))
    return NormalizationContext(calib, 100, 100, z_ref=z_ref, depth_half_extent=half)


def test_world_to_camera_oracle(rotated_calib):
    # oracle: 90 degree z rotation sends (1, 0, 0) to (0, 1, 0), then offset
    out = world_to_camera(np.array([[1.0, 0.0, 0.0]]), rotated_calib)
    assert np.allclose(out, [[10.0, -19.0, 30.0]], atol=1e-12)


def test_camera_world_round_trip(rotated_calib):
    rng = np.random.default_rng(2)
    pts = rng.normal(0, 100, (50, 3))
    back = camera_to_world(world_to_camera(pts, rotated_calib), rotated_calib)
    assert np.allclose(back, pts, atol=1e-9)


def test_ndc_oracle_values():
    ctx = small_ctx()
    joints = JointSet.all_valid(
        np.array(
            [
                [0.0, 0.0, 1000.0],  # principal ray at reference depth
                [100.0, -50.0, 1000.0],
                [0.0, 0.0, 1500.0],  # depth edge
            ]
        )
    )
    pose = ndc_from_camera(joints, ctx)
    assert np.allclose(pose.coords[0], [0.0, 0.0, 0.0], atol=1e-12)
    # u = 100 * 100/1000 + 50 = 60 -> x = 2*60/100 - 1 = 0.2
    assert np.allclose(pose.coords[1], [0.2, -0.1, 0.0], atol=1e-12)
    assert pose.coords[2, 2] == 1.0
    assert pose.valid.all()


def test_ndc_masks_without_clamping():
    ctx = small_ctx()
    joints = JointSet.all_valid(
        np.array(
            [
                [0.0, 0.0, 1501.0],  # past the far depth edge
                [2000.0, 0.0, 1000.0],  # projects far off sensor
                [0.0, 0.0, -100.0],  # behind the camera
                [0.0, 0.0, 1000.0],
            ]
        )
    )
    pose = ndc_from_camera(joints, ctx)
    assert list(pose.valid) == [False, False, False, True]
    # out-of-cube coordinates are reported as-is, never clamped
    assert pose.coords[0, 2] == pytest.approx(1.002)
    assert pose.coords[1, 0] > 1.0


def test_ndc_respects_incoming_mask():
    ctx = small_ctx()
    joints = JointSet(
        np.array([[0.0, 0.0, 1000.0], [0.0, 0.0, 1000.0]]),
        np.array([True, False]),
    )
    pose = ndc_from_camera(joints, ctx)
    assert list(pose.valid) == [True, False]


def test_ndc_round_trip_property():
    ctx = small_ctx()
    rng = np.random.default_rng(7)
    n = 1000
    cam = np.stack(
        [
            rng.uniform(-400, 400, n),
            rng.uniform(-400, 400, n),
            rng.uniform(600, 1400, n),
        ],
        axis=1,
    )
    pose = ndc_from_camera(JointSet.all_valid(cam), ctx)
    back = camera_from_ndc(pose, ctx)
    rel = np.abs(back.positions - cam) / np.maximum(np.abs(cam), 1.0)
    assert rel.max() < 1e-12
    assert np.array_equal(back.valid, pose.valid)


def test_world_round_trip_with_rotation(rotated_calib):
    ctx = NormalizationContext(rotated_calib, 100, 100, z_ref=800.0, depth_half_extent=400.0)
    rng = np.random.default_rng(8)
    world = rng.normal(0, 50, (20, 3)) + np.array([20.0, -10.0, 800.0]) @ rotated_calib.rotation
    pose = ndc_from_world(JointSet.all_valid(world), ctx)
    back = camera_to_world(camera_from_ndc(pose, ctx).positions, rotated_calib)
    assert np.allclose(back, world, atol=1e-9)


def test_context_for_skeleton_anchors_head(identity_calib):
    joints = np.zeros((13, 3))
    joints[:, 2] = 2000.0
    joints[HEAD, 2] = 1700.0
    ctx = NormalizationContext.for_skeleton(identity_calib, 346, 260, joints)
    assert ctx.z_ref == 1700.0
    assert ctx.depth_half_extent == 1000.0


def test_context_validation(identity_calib):
    with pytest.raises(OutOfRangeError):
        NormalizationContext(identity_calib, 0, 100, z_ref=0.0)
    with pytest.raises(OutOfRangeError):
        NormalizationContext(identity_calib, 100, 100, z_ref=0.0, depth_half_extent=0.0)


def test_pixel_mapping_endpoints():
    assert ndc_to_pixel(-1.0, 64) == 0.0
    assert ndc_to_pixel(1.0, 64) == 63.0
    assert pixel_to_ndc(0.0, 64) == -1.0
    assert pixel_to_ndc(63.0, 64) == 1.0
    grid = np.linspace(-1, 1, 11)
    assert np.allclose(pixel_to_ndc(ndc_to_pixel(grid, 33), 33), grid, atol=1e-14)


# ---------------------------------------------------------------------------
# rendering


def test_render_plane_oracle():
    plane = render_plane(2.0, 2.0, 5, 1.0)
    assert plane.sum() == pytest.approx(1.0, abs=1e-12)
    assert plane.argmax() == 2 * 5 + 2
    # oracle: one cell away over the center equals exp(-1/2)
    assert plane[2, 3] / plane[2, 2] == pytest.approx(math.exp(-0.5), abs=1e-12)
    assert plane[1, 2] == plane[3, 2]  # vertical symmetry
    assert plane[2, 1] == plane[2, 3]  # horizontal symmetry


def test_render_plane_truncates_at_four_sigma():
    plane = render_plane(0.0, 0.0, 64, 0.5)
    assert plane[0, 3] == 0.0 and plane[3, 0] == 0.0  # beyond 4 sigma = 2 px
    assert plane[0, 2] > 0.0
    # truncation is per axis: the (2, 2) corner survives
    assert plane[2, 2] > 0.0
    assert plane.sum() == pytest.approx(1.0, abs=1e-12)


def test_render_plane_tiny_sigma_falls_back_to_nearest_cell():
    plane = render_plane(2.6, 3.4, 8, 0.01)
    assert plane.sum() == 1.0
    assert plane[3, 3] == 1.0


def test_render_heatmaps_face_conventions():
    # distinct coordinates prove which axis feeds which face
    coords = np.array([[0.5, -0.25, 0.75]])
    pose = NdcPose(coords, np.array([True]))
    maps = render_heatmaps(pose, 65, 1.0)
    px = {c: ndc_to_pixel(c, 65) for c in (0.5, -0.25, 0.75)}
    for fi, face in enumerate(FACE_NAMES):
        au, av = FACE_AXES[face]
        r, c = np.unravel_index(maps.planes[0, fi].argmax(), (65, 65))
        assert c == px[coords[0, au]]
        assert r == px[coords[0, av]]
    assert FACE_NAMES == ("xy", "xz", "zy")
    assert FACE_AXES["zy"] == (2, 1)


def test_render_heatmaps_invalid_joint_is_zero():
    pose = NdcPose(np.array([[0.0, 0.0, 0.0], [0.5, 0.5, 0.5]]), np.array([False, True]))
    maps = render_heatmaps(pose, 16, 2.0)
    assert maps.planes[0].sum() == 0.0
    assert maps.planes[1].sum() == pytest.approx(3.0, abs=1e-9)
    assert list(maps.valid) == [False, True]
    assert maps.res == 16


def test_render_heatmaps_validation():
    pose = NdcPose(np.zeros((1, 3)), np.array([True]))
    with pytest.raises(OutOfRangeError):
        render_heatmaps(pose, 1, 2.0)
    with pytest.raises(OutOfRangeError):
        render_heatmaps(pose, 16, 0.0)
    with pytest.raises(ShapeMismatchError):
        MarginalHeatmaps(np.zeros((2, 3, 8, 8)), np.array([True]))
    with pytest.raises(ShapeMismatchError):
        NdcPose(np.zeros((2, 2)), np.array([True, True]))
    with pytest.raises(ShapeMismatchError):
        JointSet(np.zeros((2, 3)), np.array([True]))


# ---------------------------------------------------------------------------
# pose CSV


def test_ndc_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    rows = []
    for t in (0, 1000, 2000):
        coords = rng.uniform(-1, 1, (4, 3))
        valid = rng.random(4) > 0.3
        rows.append((t, NdcPose(coords, valid)))
    path = tmp_path / "ndc.csv"
    write_ndc_csv(rows, path)
    back = read_ndc_csv(path)
    assert [t for t, _ in back] == [0, 1000, 2000]
    for (_, a), (_, b) in zip(rows, back):
        assert np.array_equal(a.coords, b.coords)  # repr round trip is exact
        assert np.array_equal(a.valid, b.valid)


def test_ndc_csv_errors(tmp_path):
    path = tmp_path / "ndc.csv"
    path.write_text("t,j0x\n")
    with pytest.raises(FormatError, match="header"):
        read_ndc_csv(path)
    path.write_text("t,j0x,j0y,j0z,j0v\n0,0.0,0.0\n")
    with pytest.raises(FormatError, match="fields"):
        read_ndc_csv(path)
    with pytest.raises(FormatError, match="nothing"):
        write_ndc_csv([], path)
    mixed = [
        (0, NdcPose(np.zeros((1, 3)), np.ones(1, dtype=bool))),
        (1, NdcPose(np.zeros((2, 3)), np.ones(2, dtype=bool))),
    ]
    with pytest.raises(ShapeMismatchError):
        write_ndc_csv(mixed, path)
