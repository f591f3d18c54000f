import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from stereogt import geometry, metrics, oracle, registration
from stereogt.errors import FormatError, SceneSpecError


# ---------------------------------------------------------------------------
# Spec validation
# ---------------------------------------------------------------------------


def test_spec_rejects_bad_inputs():
    with pytest.raises(SceneSpecError):
        oracle.SceneSpec(kind="plasma")
    with pytest.raises(SceneSpecError):
        oracle.SceneSpec(kind="constant", width=0)
    with pytest.raises(SceneSpecError):
        oracle.SceneSpec(kind="constant", d_const=300.0)  # above the 256 ceiling
    with pytest.raises(SceneSpecError):
        oracle.SceneSpec(kind="constant", d_const=40.0, width=32)  # exceeds width
    with pytest.raises(SceneSpecError):
        oracle.SceneSpec(kind="occlusion", d_near=4.0, d_far=9.0)  # near must exceed far
    with pytest.raises(SceneSpecError):
        oracle.SceneSpec(kind="occlusion", d_near=6.5, d_far=2.0)  # integer only
    with pytest.raises(SceneSpecError):
        oracle.SceneSpec(kind="ramp", d_lo=-1.0, d_hi=5.0)
    with pytest.raises(SceneSpecError):
        oracle.SceneSpec(kind="constant", blank=(10, 10, 5, 20))


def test_default_specs_within_valid_mask():
    for kind in oracle.KINDS:
        spec = oracle.SceneSpec(kind=kind)
        s = oracle.synth_stereo(spec)
        valid = s.gt.valid
        assert valid.any()
        inside = metrics.valid_mask(s.gt, 256.0)
        np.testing.assert_array_equal(valid, inside)


# ---------------------------------------------------------------------------
# synth_stereo
# ---------------------------------------------------------------------------


def test_zero_disparity_right_equals_left():
    spec = oracle.SceneSpec(kind="constant", d_const=0.0, width=40, height=20, seed=2)
    s = oracle.synth_stereo(spec)
    np.testing.assert_array_equal(s.left, s.right)
    assert not s.gt.valid.any()  # zero disparity encodes invalid


def test_integer_shift_is_pure_column_shift():
    k = 9
    spec = oracle.SceneSpec(kind="constant", d_const=float(k), width=64, height=16, seed=5)
    s = oracle.synth_stereo(spec)
    np.testing.assert_array_equal(s.right[:, : 64 - k], s.left[:, k:])
    # ground truth valid exactly where the right-view partner exists
    np.testing.assert_array_equal(s.gt.valid[:, k:], np.ones((16, 64 - k), bool))
    assert not s.gt.valid[:, :k].any()


def test_occlusion_band_width_matches_analytics():
    spec = oracle.SceneSpec(kind="occlusion", d_near=12, d_far=4, width=96, height=8, seed=0)
    s = oracle.synth_stereo(spec)
    x0 = 96 // 3
    row_valid = s.gt.valid[0]
    band = np.arange(x0 - (12 - 4), x0)
    assert not row_valid[band].any()  # occluded strip invalid
    assert row_valid[x0 : x0 + 8].all()  # near plane itself visible
    assert not row_valid[:4].any()  # left border strip (d_far)
    assert row_valid[4 : x0 - 8].all()
    np.testing.assert_array_equal(s.gt.data[0, band], 0.0)


def test_ramp_field_is_linear_subpixel():
    spec = oracle.SceneSpec(kind="ramp", d_lo=5.0, d_hi=11.0, width=128, height=4, seed=1)
    field = oracle.left_field(spec)
    assert field[0, 0] == 5.0 and field[0, -1] == 11.0
    slopes = np.diff(field[0])
    np.testing.assert_allclose(slopes, slopes[0])
    assert not float(field[0, 1]).is_integer()  # genuinely sub-pixel


def test_ramp_self_occlusion_rejected():
    with pytest.raises(SceneSpecError):
        oracle.left_field(oracle.SceneSpec(kind="ramp", d_lo=1.0, d_hi=200.0, width=128))


def test_bimodal_histogram_has_two_modes():
    spec = oracle.SceneSpec(kind="bimodal", d_near=48, d_far=12, width=256, height=128, seed=4)
    s = oracle.synth_stereo(spec)
    hist = metrics.histogram(s.gt, bin_width=1.0)
    occupied = np.nonzero(hist.frequencies > 0.01)[0]
    # Exactly two dominant disparity levels, at ground and leaf values.
    assert len(occupied) == 2
    lows = hist.edges[occupied]
    assert 12.0 in lows and 48.0 in lows
    # ground occupies most pixels, leaves a meaningful minority
    assert hist.frequencies.max() > 0.5
    assert np.sort(hist.frequencies[occupied])[0] > 0.1


def test_blank_rectangle_is_textureless():
    spec = oracle.SceneSpec(
        kind="constant", d_const=8.0, width=64, height=32, blank=(20, 10, 40, 22), seed=3
    )
    s = oracle.synth_stereo(spec)
    assert (s.left[10:22, 20:40] == 128).all()
    # blank transfers into the right view at the shifted location
    assert (s.right[10:22, 12:32] == 128).all()


def test_seed_determinism():
    spec = oracle.SceneSpec(kind="occlusion", d_near=10, d_far=2, width=64, height=32, seed=11)
    a, b = oracle.synth_stereo(spec), oracle.synth_stereo(spec)
    np.testing.assert_array_equal(a.left, b.left)
    np.testing.assert_array_equal(a.right, b.right)
    np.testing.assert_array_equal(a.gt.data, b.gt.data)


# ---------------------------------------------------------------------------
# synth_depth_rig
# ---------------------------------------------------------------------------


def test_identity_rig_expected_is_pixelwise_conversion():
    spec = oracle.SceneSpec(kind="ramp", d_lo=4.0, d_hi=12.0, width=32, height=24)
    depth, (km, kz), expected = oracle.synth_depth_rig(spec, geometry.RigTransform.identity())
    assert km == kz
    field = oracle.left_field(spec)
    want = (spec.baseline_mm * spec.focal_px / depth.data).astype(np.float32)
    np.testing.assert_array_equal(expected.data, want)
    np.testing.assert_allclose(expected.data, field, atol=1e-3)


def test_pure_x_translation_shifts_field_with_holes():
    # f=1104, Z chosen so the projected shift is exactly 4 columns.
    spec = oracle.SceneSpec(kind="constant", d_const=8.0, width=24, height=10)
    Z0 = spec.baseline_mm * spec.focal_px / 8.0
    tx = 4.0 * Z0 / spec.focal_px
    rig = geometry.RigTransform(R=np.eye(3), t=np.array([tx, 0.0, 0.0]))
    depth, _, expected = oracle.synth_depth_rig(spec, rig)
    assert not expected.valid[:, :4].any()  # holes where nothing lands
    np.testing.assert_allclose(expected.data[:, 4:], 8.0, atol=1e-5)


def test_small_rotation_expected_matches_registration():
    rng = np.random.default_rng(8)
    spec = oracle.SceneSpec(kind="constant", d_const=5.0, width=8, height=8)
    rig = geometry.RigTransform(
        R=Rotation.from_rotvec(rng.normal(0, 0.002, 3)).as_matrix(),
        t=rng.normal(0, 2.0, 3),
    )
    depth, (km, kz), expected = oracle.synth_depth_rig(spec, rig)
    got = registration.register_depth(
        depth, rig, km, kz, spec.stereo_geometry, spec.width, spec.height
    )
    np.testing.assert_array_equal(got.data, expected.data)


# ---------------------------------------------------------------------------
# Scene files
# ---------------------------------------------------------------------------


def test_scene_file_round_trip(tmp_path):
    spec = oracle.SceneSpec(
        kind="bimodal", width=100, height=50, d_near=30, d_far=7,
        density=0.25, blank=(1, 2, 30, 40), seed=13,
        baseline_mm=100.0, focal_px=900.0,
    )
    path = tmp_path / "scene.txt"
    oracle.write_scene_file(path, spec)
    assert oracle.read_scene_file(path) == spec


def test_scene_file_rejects_unknown_keys(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("kind constant\nwobble 3\n")
    with pytest.raises(FormatError):
        oracle.read_scene_file(p)
    p.write_text("width 32\n")
    with pytest.raises(FormatError):
        oracle.read_scene_file(p)
