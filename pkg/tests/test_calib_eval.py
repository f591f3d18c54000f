import numpy as np
import pytest

from stereogt import calib_eval, geometry
from stereogt.calib_eval import CornerSet
from stereogt.errors import BehindCameraError, FormatError

from conftest import random_rig

K_MECH = geometry.Intrinsics(fx=380.0, fy=380.0, cx=320.0, cy=240.0)
K_ZED = geometry.Intrinsics(fx=1050.0, fy=1050.0, cx=640.0, cy=360.0)


def synth_corners(rig, rows=8, cols=11, z0=900.0, z_slope=0.0):
    """Chessboard corners that are exactly consistent with the given rig.

    The board spans the depth-camera image on a regular pixel grid; depth can
    tilt linearly across columns via z_slope (mm per column).
    """
    us = np.linspace(120.0, 520.0, cols)
    vs = np.linspace(100.0, 380.0, rows)
    uu, vv = np.meshgrid(us, vs)
    mech_px = np.stack([uu.ravel(), vv.ravel()], axis=1)
    depths = z0 + z_slope * np.tile(np.arange(cols, dtype=np.float64), rows)
    pts = geometry.backproject(K_MECH, mech_px, depths)
    zed_px = geometry.project(K_ZED, geometry.transform_point(rig, pts))
    return CornerSet(
        mech_pixels=mech_px, mech_depths=depths, zed_pixels=zed_px,
        rows=rows, cols=cols,
    )


def test_consistent_corners_score_zero(rng):
    for _ in range(5):
        rig = random_rig(rng, rot_scale=0.3, t_scale=80.0)
        corners = synth_corners(rig, z_slope=12.0)
        stats = calib_eval.registration_error(corners, rig, K_MECH, K_ZED)
        assert stats.errors.shape == (88,)
        assert stats.mean <= 1e-9
        assert stats.max <= 1e-9


def test_lateral_shift_error_is_focal_over_depth():
    z = 1200.0
    dt = 3.0  # mm
    rig = geometry.RigTransform(R=np.eye(3), t=np.zeros(3))
    corners = synth_corners(rig, z0=z)
    bumped = geometry.RigTransform(R=np.eye(3), t=np.array([dt, 0.0, 0.0]))
    stats = calib_eval.registration_error(corners, bumped, K_MECH, K_ZED)
    # fronto-parallel board: every corner moves by exactly fx * dt / Z pixels
    predicted = K_ZED.fx * dt / z
    assert stats.mean == pytest.approx(predicted, rel=1e-9)
    assert stats.max == pytest.approx(predicted, rel=1e-9)
    assert abs(stats.mean - predicted) / predicted < 0.01


def test_vertical_shift_uses_fy():
    z = 800.0
    dt = 2.5
    rig = geometry.RigTransform(R=np.eye(3), t=np.zeros(3))
    corners = synth_corners(rig, z0=z)
    bumped = geometry.RigTransform(R=np.eye(3), t=np.array([0.0, dt, 0.0]))
    stats = calib_eval.registration_error(corners, bumped, K_MECH, K_ZED)
    assert stats.mean == pytest.approx(K_ZED.fy * dt / z, rel=1e-9)


def test_error_grows_with_perturbation(rng):
    rig = random_rig(rng, rot_scale=0.2, t_scale=60.0)
    corners = synth_corners(rig, z_slope=6.0)
    means = []
    for dt in (0.5, 1.0, 2.0, 4.0):
        bumped = geometry.RigTransform(R=rig.R, t=rig.t + np.array([dt, 0.0, 0.0]))
        means.append(calib_eval.registration_error(corners, bumped, K_MECH, K_ZED).mean)
    assert means == sorted(means)


def test_world_frame_choice_is_irrelevant(rng):
    # the same physical rig expressed against two different world frames must
    # yield identical chained transforms, hence identical errors
    def as_ext(rig):
        return geometry.Extrinsics(rig.R, rig.t)

    def reframe(ext, world):
        # world-to-camera composed with a new-world-to-world rigid motion
        return geometry.Extrinsics(ext.R @ world.R, ext.R @ world.t + ext.t)

    mech_rec = as_ext(random_rig(rng, rot_scale=0.4, t_scale=100.0))
    zed_rec = as_ext(random_rig(rng, rot_scale=0.4, t_scale=100.0))
    rig = geometry.chain_extrinsics(mech_rec, zed_rec)
    corners = synth_corners(rig, z_slope=8.0)

    world = random_rig(rng, rot_scale=1.0, t_scale=500.0)
    rig2 = geometry.chain_extrinsics(reframe(mech_rec, world), reframe(zed_rec, world))
    stats = calib_eval.registration_error(corners, rig2, K_MECH, K_ZED)
    assert stats.max <= 1e-6  # mm-scale world offsets cost a few ulps


def test_combine_trials_pools_and_keeps_means(rng):
    rig = geometry.RigTransform(R=np.eye(3), t=np.zeros(3))
    trials = []
    for i in range(6):
        bumped = geometry.RigTransform(R=np.eye(3), t=np.array([0.5 * i, 0.0, 0.0]))
        corners = synth_corners(rig, z0=1000.0 + 50.0 * i)
        trials.append(calib_eval.registration_error(corners, bumped, K_MECH, K_ZED))
    pooled = calib_eval.combine_trials(trials)
    assert pooled.errors.shape == (6 * 88,)
    assert len(pooled.trial_means) == 6
    assert pooled.mean == pytest.approx(float(pooled.errors.mean()))
    assert pooled.max == max(s.max for s in trials)
    assert pooled.trial_means[0] == trials[0].mean
    with pytest.raises(FormatError):
        calib_eval.combine_trials([])


def test_behind_camera_names_the_corner():
    rig = geometry.RigTransform(R=np.eye(3), t=np.zeros(3))
    corners = synth_corners(rig, z0=500.0)
    flipped = geometry.RigTransform(R=np.eye(3), t=np.array([0.0, 0.0, -2000.0]))
    with pytest.raises(BehindCameraError, match="corner 0"):
        calib_eval.registration_error(corners, flipped, K_MECH, K_ZED)


def test_corner_set_validation():
    ok = synth_corners(geometry.RigTransform(R=np.eye(3), t=np.zeros(3)))
    with pytest.raises(FormatError):
        CornerSet(ok.mech_pixels[:-1], ok.mech_depths[:-1], ok.zed_pixels[:-1], 8, 11)
    with pytest.raises(FormatError):
        CornerSet(ok.mech_pixels, np.zeros(88), ok.zed_pixels, 8, 11)
    with pytest.raises(FormatError):
        CornerSet(ok.mech_pixels, ok.mech_depths, ok.zed_pixels, 0, 11)


def test_corner_file_round_trip(tmp_path, rng):
    rig = random_rig(rng, rot_scale=0.3, t_scale=70.0)
    corners = synth_corners(rig, z_slope=4.0)
    path = tmp_path / "corners.txt"
    calib_eval.write_corner_file(path, corners)
    back = calib_eval.read_corner_file(path)
    assert (back.rows, back.cols) == (8, 11)
    np.testing.assert_array_equal(back.mech_pixels, corners.mech_pixels)
    np.testing.assert_array_equal(back.mech_depths, corners.mech_depths)
    np.testing.assert_array_equal(back.zed_pixels, corners.zed_pixels)


def test_corner_file_format_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("1 2 3 4 5\n")
    with pytest.raises(FormatError, match="grid"):
        calib_eval.read_corner_file(p)
    p.write_text("grid 1 1\n1 2 3\n")
    with pytest.raises(FormatError):
        calib_eval.read_corner_file(p)
    p.write_text("grid 1 1\na b c d e\n")
    with pytest.raises(FormatError, match="non-numeric"):
        calib_eval.read_corner_file(p)


def test_corner_file_comments_and_blanks(tmp_path):
    p = tmp_path / "ok.txt"
    p.write_text(
        "# detector output\n"
        "grid 1 2\n"
        "\n"
        "100.0 50.0 900.0 400.0 200.0  # corner 0\n"
        "110.0 50.0 905.0 410.0 200.0\n"
    )
    corners = calib_eval.read_corner_file(p)
    assert corners.count == 2
    assert corners.mech_depths[1] == 905.0
