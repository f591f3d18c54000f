"""Synthetic stereo scenes with analytically known ground truth.

Every scene kind has a closed-form left-view disparity field, so matcher and
registration outputs can be checked against exact expected values instead of
a physical dataset.  The right image is produced by reverse warping: each
right-view pixel looks up its own disparity, samples the left image at
``x + d`` with linear interpolation, and falls back to fresh random texture
where the source is occluded or out of frame.  Integer disparities therefore
reproduce pure column shifts bit for bit.

Scene kinds:

    constant    single fronto-parallel plane, disparity d_const everywhere
    ramp        disparity rises linearly from d_lo (left edge) to d_hi (right)
    occlusion   near vertical band (d_near) over a far plane (d_far)
    bimodal     scattered near rectangles (d_near) over a ground plane (d_far),
                giving a two-mode disparity histogram

The left ground truth is marked invalid wherever the scene point is not
visible in the right view (the occlusion band of width d_near - d_far to the
left of a near region, plus the left image border strip).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geometry
from .dataset_io import StereoSample
from .errors import FormatError, SceneSpecError
from .registration import DepthMap, DisparityMap, StereoGeometry

KINDS = ("constant", "ramp", "occlusion", "bimodal")

# 0 is the invalid sentinel in disparity maps and 256 the evaluation default
# for d_max, so generated fields stay inside (0, 256).
D_CEIL = 256.0


@dataclass(frozen=True)
class SceneSpec:
    kind: str
    width: int = 512
    height: int = 512
    d_const: float = 40.0
    d_lo: float = 20.0
    d_hi: float = 60.0
    d_near: float = 64.0
    d_far: float = 20.0
    density: float = 0.5
    blank: tuple | None = None
    seed: int = 0
    baseline_mm: float = 120.0
    focal_px: float = 1104.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SceneSpecError(f"unknown scene kind '{self.kind}', expected one of {KINDS}")
        if self.width <= 0 or self.height <= 0:
            raise SceneSpecError("scene dimensions must be positive")
        if not 0.0 <= self.density <= 1.0:
            raise SceneSpecError("dot density must lie in [0, 1]")
        if self.baseline_mm <= 0 or self.focal_px <= 0:
            raise SceneSpecError("stereo geometry must be positive")
        lo, hi = self._d_range()
        if lo < 0 or (lo == 0 and self.kind != "constant"):
            raise SceneSpecError(f"{self.kind} disparities must be positive, got minimum {lo}")
        if hi >= min(D_CEIL, self.width):
            raise SceneSpecError(
                f"maximum disparity {hi} must stay below min(256, width={self.width})"
            )
        if self.kind in ("occlusion", "bimodal"):
            for name in ("d_near", "d_far"):
                if not float(getattr(self, name)).is_integer():
                    raise SceneSpecError(f"{self.kind} scenes need integer {name}")
            if self.d_near <= self.d_far:
                raise SceneSpecError("d_near must exceed d_far (nearer = larger disparity)")
        if self.blank is not None:
            x0, y0, x1, y1 = self.blank
            if not (0 <= x0 < x1 <= self.width and 0 <= y0 < y1 <= self.height):
                raise SceneSpecError(f"blank rectangle {self.blank} is not inside the scene")

    def _d_range(self) -> tuple:
        if self.kind == "constant":
            return self.d_const, self.d_const
        if self.kind == "ramp":
            return min(self.d_lo, self.d_hi), max(self.d_lo, self.d_hi)
        return self.d_far, self.d_near

    @property
    def stereo_geometry(self) -> StereoGeometry:
        return StereoGeometry(baseline_mm=self.baseline_mm, focal_px=self.focal_px)


# ---------------------------------------------------------------------------
# Analytic disparity fields
# ---------------------------------------------------------------------------


def _near_regions(spec: SceneSpec) -> list:
    """Near-plane rectangles as (x0, x1, y0, y1), in left-view coordinates."""
    if spec.kind == "occlusion":
        x0 = spec.width // 3
        return [(x0, min(x0 + spec.width // 3, spec.width), 0, spec.height)]
    if spec.kind == "bimodal":
        rng = np.random.default_rng(spec.seed + 1)
        rw, rh = max(spec.width // 5, 2), max(spec.height // 5, 2)
        # The leaf rectangles start to the right of the widest occlusion band
        # so their near disparity always has room to stay visible.
        xmin = min(int(spec.d_near), spec.width - rw)
        regions = []
        for _ in range(8):
            x0 = int(rng.integers(xmin, spec.width - rw + 1))
            y0 = int(rng.integers(0, spec.height - rh + 1))
            regions.append((x0, x0 + rw, y0, y0 + rh))
        return regions
    return []


def left_field(spec: SceneSpec) -> np.ndarray:
    """Exact per-pixel disparity of the left view, as float64."""
    h, w = spec.height, spec.width
    if spec.kind == "constant":
        return np.full((h, w), float(spec.d_const))
    if spec.kind == "ramp":
        slope = (spec.d_hi - spec.d_lo) / (w - 1) if w > 1 else 0.0
        if slope >= 1.0:
            raise SceneSpecError("ramp slope must stay below 1 px/px or the scene self-occludes")
        row = spec.d_lo + slope * np.arange(w, dtype=np.float64)
        return np.broadcast_to(row, (h, w)).copy()
    field = np.full((h, w), float(spec.d_far))
    for x0, x1, y0, y1 in _near_regions(spec):
        field[y0:y1, x0:x1] = float(spec.d_near)
    return field


def _right_field(spec: SceneSpec, left: np.ndarray) -> np.ndarray:
    """Per-pixel disparity of the right view; -1 where no left point lands."""
    h, w = left.shape
    if spec.kind == "constant":
        return np.full((h, w), float(spec.d_const))
    if spec.kind == "ramp":
        slope = (spec.d_hi - spec.d_lo) / (w - 1) if w > 1 else 0.0
        xs = np.arange(w, dtype=np.float64)
        row = (spec.d_lo + slope * xs) / (1.0 - slope)
        return np.broadcast_to(row, (h, w)).copy()
    # Piecewise-constant integer fields: splat each left pixel to x - d and
    # keep the largest disparity (nearest surface) per landing spot.
    right = np.full((h, w), -1.0)
    xs = np.arange(w)
    for y in range(h):
        d = left[y]
        xr = (xs - d.astype(np.int64)).astype(np.int64)
        ok = (xr >= 0) & (xr < w)
        np.maximum.at(right[y], xr[ok], d[ok])
    return right


def visibility(spec: SceneSpec, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """True where the left pixel's scene point is also visible in the right view."""
    h, w = left.shape
    xr = np.arange(w, dtype=np.float64) - left
    in_bounds = (xr >= 0.0) & (xr <= w - 1.0)
    if spec.kind in ("constant", "ramp"):
        # Monotonic warps cannot self-occlude; bounds are the whole story.
        return np.broadcast_to(in_bounds, (h, w)).copy()
    idx = np.clip(xr.astype(np.int64), 0, w - 1)
    rows = np.arange(h)[:, None]
    return in_bounds & (right[rows, idx] == left)


# ---------------------------------------------------------------------------
# Image synthesis
# ---------------------------------------------------------------------------


def _texture(rng, shape, density: float) -> np.ndarray:
    """Random-dot texture over a mid-gray background."""
    img = np.full(shape, 128, dtype=np.uint8)
    mask = rng.random(shape) < density
    img[mask] = rng.integers(0, 256, size=shape, dtype=np.uint8)[mask]
    return img


def _sample_row(img: np.ndarray, src_x: np.ndarray) -> np.ndarray:
    """Linear interpolation along x for every row; src_x is (h, w) float."""
    h, w = src_x.shape
    x0 = np.floor(src_x)
    frac = src_x - x0
    x0 = np.clip(x0.astype(np.int64), 0, w - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    rows = np.arange(h)[:, None]
    a = img[rows, x0].astype(np.float64)
    b = img[rows, x1].astype(np.float64)
    out = (1.0 - frac) * a + frac * b
    return np.floor(out + 0.5).astype(np.uint8)


def synth_stereo(spec: SceneSpec) -> StereoSample:
    """Render a rectified pair whose exact disparity is known analytically.

    The returned sample's ground truth carries the analytic field, invalid
    (0.0) wherever the point has no right-view correspondence.
    """
    h, w = spec.height, spec.width
    rng = np.random.default_rng(spec.seed)
    left_gray = _texture(rng, (h, w), spec.density)
    if spec.blank is not None:
        x0, y0, x1, y1 = spec.blank
        left_gray[y0:y1, x0:x1] = 128

    field = left_field(spec)
    rfield = _right_field(spec, field)

    src_x = np.arange(w, dtype=np.float64) + rfield
    seen = rfield >= 0.0
    usable = seen & (src_x >= 0.0) & (src_x <= w - 1.0)
    right_gray = _sample_row(left_gray, np.where(usable, src_x, 0.0))
    fresh = _texture(rng, (h, w), spec.density)
    right_gray = np.where(usable, right_gray, fresh)

    vis = visibility(spec, field, rfield)
    gt = np.where(vis, field, 0.0).astype(np.float32)

    def _rgb(gray):
        return np.repeat(gray[:, :, None], 3, axis=2)

    return StereoSample(left=_rgb(left_gray), right=_rgb(right_gray), gt=DisparityMap(gt))


# ---------------------------------------------------------------------------
# Depth-camera fixture and brute-force registration reference
# ---------------------------------------------------------------------------


def reference_register(
    depth: DepthMap,
    rig: geometry.RigTransform,
    k_mech: geometry.Intrinsics,
    k_zed: geometry.Intrinsics,
    geom: StereoGeometry,
    out_w: int,
    out_h: int,
) -> DisparityMap:
    """Scalar per-pixel reimplementation of depth-to-stereo registration.

    Deliberately written with plain Python floats and an explicit double loop
    (backproject, rigid transform, project, half-up rounding, min-z buffer)
    so the vectorized pipeline can be checked against it pixel for pixel.
    """
    R, t = rig.R, rig.t
    zbuf = np.full((out_h, out_w), np.inf, dtype=np.float64)
    for v in range(depth.height):
        for u in range(depth.width):
            if not depth.valid[v, u]:
                continue
            Z = float(depth.data[v, u])
            x = Z * (u - k_mech.cx) / k_mech.fx
            y = Z * (v - k_mech.cy) / k_mech.fy
            qx = R[0, 0] * x + R[0, 1] * y + R[0, 2] * Z + t[0]
            qy = R[1, 0] * x + R[1, 1] * y + R[1, 2] * Z + t[1]
            qz = R[2, 0] * x + R[2, 1] * y + R[2, 2] * Z + t[2]
            if qz <= 0.0:
                continue
            ut = math.floor(k_zed.fx * qx / qz + k_zed.cx + 0.5)
            vt = math.floor(k_zed.fy * qy / qz + k_zed.cy + 0.5)
            if 0 <= ut < out_w and 0 <= vt < out_h:
                if qz < zbuf[vt, ut]:
                    zbuf[vt, ut] = qz
    disp = np.zeros((out_h, out_w), dtype=np.float32)
    hit = np.isfinite(zbuf)
    disp[hit] = (geom.baseline_mm * geom.focal_px / zbuf[hit]).astype(np.float32)
    return DisparityMap(disp)


def synth_depth_rig(spec: SceneSpec, rig: geometry.RigTransform):
    """Depth-camera fixture: a depth map plus the expected registered disparity.

    The scene's analytic field is interpreted as seen from the depth camera;
    depth is b*f/d in that frame.  Both cameras share centered intrinsics of
    the spec's focal length.  The expected map comes from the brute-force
    reference, so any rig is supported.

    Returns (depth map, (mech intrinsics, zed intrinsics), expected disparity).
    """
    field = left_field(spec)
    geom = spec.stereo_geometry
    depth_data = np.zeros_like(field)
    pos = field > 0
    depth_data[pos] = geom.baseline_mm * geom.focal_px / field[pos]
    depth = DepthMap(depth_data)

    k = geometry.Intrinsics(
        fx=spec.focal_px,
        fy=spec.focal_px,
        cx=(spec.width - 1) / 2.0,
        cy=(spec.height - 1) / 2.0,
    )
    expected = reference_register(depth, rig, k, k, geom, spec.width, spec.height)
    return depth, (k, k), expected


# ---------------------------------------------------------------------------
# Spec files
# ---------------------------------------------------------------------------

_INT_FIELDS = ("width", "height", "seed")
_FLOAT_FIELDS = (
    "d_const",
    "d_lo",
    "d_hi",
    "d_near",
    "d_far",
    "density",
    "baseline_mm",
    "focal_px",
)


def read_scene_file(path) -> SceneSpec:
    """Parse a key-value scene file; unknown keys are rejected."""
    kwargs = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        rest = rest.strip()
        if key == "kind":
            kwargs["kind"] = rest
        elif key in _INT_FIELDS:
            kwargs[key] = int(rest)
        elif key in _FLOAT_FIELDS:
            kwargs[key] = float(rest)
        elif key == "blank":
            kwargs["blank"] = tuple(int(v) for v in rest.split())
        else:
            raise FormatError(f"{path}: unknown scene key '{key}'")
    if "kind" not in kwargs:
        raise FormatError(f"{path}: scene file must set 'kind'")
    try:
        return SceneSpec(**kwargs)
    except TypeError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_scene_file(path, spec: SceneSpec) -> None:
    lines = [f"kind {spec.kind}"]
    for key in _INT_FIELDS:
        lines.append(f"{key} {getattr(spec, key)}")
    for key in _FLOAT_FIELDS:
        lines.append(f"{key} {getattr(spec, key)!r}")
    if spec.blank is not None:
        lines.append("blank " + " ".join(str(v) for v in spec.blank))
    Path(path).write_text("\n".join(lines) + "\n")
