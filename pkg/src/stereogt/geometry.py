"""Pinhole camera model, rigid transforms, extrinsic chaining and calibration averaging.

Conventions used throughout the toolkit:

* Camera frame: right-handed, +x right, +y down, +z in front of the camera.
* Pixel coordinates (u, v) are real-valued, u along image width, v along height.
* Intrinsics are in pixels, translations in millimeters.
* All computation is done in double precision.

Points and pixels are plain numpy arrays: a point is a length-3 array (or an
(..., 3) stack), a pixel a length-2 array (or an (..., 2) stack).  Every
operation here is a pure function and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import (
    CalibrationError,
    DivergentCalibrationError,
    EmptyInputError,
    FormatError,
    InvalidDepthError,
    BehindCameraError,
)

ROTATION_TOL = 1e-9


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole projection parameters of one camera (no skew, no distortion).

    Lens distortion is assumed to be corrected upstream by the camera driver,
    so a plain pinhole K is all that is needed.
    """

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            object.__setattr__(self, name, float(getattr(self, name)))
        vals = (self.fx, self.fy, self.cx, self.cy)
        if not all(np.isfinite(v) for v in vals):
            raise CalibrationError(f"non-finite intrinsics {vals}")
        if self.fx <= 0 or self.fy <= 0:
            raise CalibrationError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if self.cx < 0 or self.cy < 0:
            raise CalibrationError(f"principal point must be non-negative, got cx={self.cx}, cy={self.cy}")

    def as_matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]],
            dtype=np.float64,
        )


def _validated_rotation(R, what: str) -> np.ndarray:
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        raise CalibrationError(f"{what}: rotation must be 3x3, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise CalibrationError(f"{what}: rotation contains non-finite entries")
    err = np.abs(R.T @ R - np.eye(3)).max()
    if err > ROTATION_TOL:
        raise CalibrationError(f"{what}: rotation is not orthonormal (max |R^T R - I| = {err:.3e})")
    det = np.linalg.det(R)
    if abs(det - 1.0) > ROTATION_TOL:
        raise CalibrationError(f"{what}: rotation determinant is {det:.12f}, expected +1")
    return R


class _RigidBase:
    """Rotation + translation pair with validated orthonormality."""

    __slots__ = ("R", "t")

    def __init__(self, R, t):
        R = _validated_rotation(R, type(self).__name__)
        t = np.asarray(t, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(t)):
            raise CalibrationError(f"{type(self).__name__}: translation contains non-finite entries")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __repr__(self):
        return f"{type(self).__name__}(R={self.R.tolist()}, t={self.t.tolist()})"

    def __eq__(self, other):
        if not isinstance(other, type(self)):
            return NotImplemented
        return np.array_equal(self.R, other.R) and np.array_equal(self.t, other.t)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))


class Extrinsics(_RigidBase):
    """World-to-camera rigid transform of a single camera (from Zhang-style calibration)."""


class RigTransform(_RigidBase):
    """Rigid transform mapping depth-camera coordinates into stereo-left coordinates."""

    def inverse(self) -> "RigTransform":
        return RigTransform(self.R.T, -(self.R.T @ self.t))


def chain_extrinsics(mech: Extrinsics, zed: Extrinsics) -> RigTransform:
    """Chain two world-to-camera extrinsics through their shared world frame.

    Returns the relative transform taking points expressed in the depth
    camera's frame into the stereo-left frame:

        R = R_zed . R_mech^-1
        t = t_zed - R_zed . R_mech^-1 . t_mech
    """
    R = zed.R @ mech.R.T
    t = zed.t - R @ mech.t
    return RigTransform(R, t)


def average_rig(transforms) -> RigTransform:
    """Average repeated calibrations of the same rig.

    The translation is the arithmetic mean.  The rotation is the chordal mean:
    unit quaternions are sign-aligned to the first element, averaged and
    renormalized.  That is well-conditioned for the small spread expected
    between repeated calibrations; rotations more than 90 degrees apart have
    no meaningful chordal mean and raise instead.
    """
    transforms = list(transforms)
    if not transforms:
        raise EmptyInputError("cannot average an empty sequence of rig transforms")
    if len(transforms) == 1:
        return transforms[0]

    quats = np.stack([Rotation.from_matrix(t.R).as_quat() for t in transforms])
    # |q_i . q_j| = cos(theta_ij / 2): relative angle > 90 deg <=> |dot| < cos(45 deg)
    dots = np.abs(quats @ quats.T)
    if dots.min() < np.cos(np.pi / 4) - 1e-12:
        worst = np.unravel_index(np.argmin(dots), dots.shape)
        angle = 2.0 * np.degrees(np.arccos(np.clip(dots.min(), -1.0, 1.0)))
        raise DivergentCalibrationError(
            f"rotations {worst[0]} and {worst[1]} differ by {angle:.1f} deg (> 90 deg); "
            "refusing to average divergent calibrations"
        )

    signs = np.where(quats @ quats[0] < 0.0, -1.0, 1.0)
    mean_q = (quats * signs[:, None]).mean(axis=0)
    mean_q /= np.linalg.norm(mean_q)
    R = Rotation.from_quat(mean_q).as_matrix()
    t = np.mean([t.t for t in transforms], axis=0)
    return RigTransform(R, t)


def backproject(K: Intrinsics, pix, Z) -> np.ndarray:
    """Lift pixel coordinates with known depth into the camera frame.

    ``pix`` is an (..., 2) array of (u, v); ``Z`` a scalar or (...) array of
    depths in millimeters.  Returns (..., 3) points:

        (Z * (u - cx) / fx,  Z * (v - cy) / fy,  Z)
    """
    pix = np.asarray(pix, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    if np.any(Z <= 0):
        raise InvalidDepthError("backprojection requires strictly positive depth")
    x = Z * (pix[..., 0] - K.cx) / K.fx
    y = Z * (pix[..., 1] - K.cy) / K.fy
    return np.stack([x, y, Z * np.ones_like(x)], axis=-1)


def transform_point(rig: RigTransform, p) -> np.ndarray:
    """Apply the rigid transform: R . p + t, for a point or an (..., 3) stack."""
    p = np.asarray(p, dtype=np.float64)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    R, t = rig.R, rig.t
    # Written out per component (not as a matmul) so the evaluation order is
    # fixed and results match a plain scalar reimplementation bit for bit.
    qx = R[0, 0] * x + R[0, 1] * y + R[0, 2] * z + t[0]
    qy = R[1, 0] * x + R[1, 1] * y + R[1, 2] * z + t[1]
    qz = R[2, 0] * x + R[2, 1] * y + R[2, 2] * z + t[2]
    return np.stack([qx, qy, qz], axis=-1)


def project(K: Intrinsics, p) -> np.ndarray:
    """Project camera-frame points onto the image plane.

    Returns (..., 2) pixels (fx*x/z + cx, fy*y/z + cy).  The divisor is the
    point's own z coordinate; points at or behind the camera plane raise.
    """
    p = np.asarray(p, dtype=np.float64)
    z = p[..., 2]
    if np.any(z <= 0):
        raise BehindCameraError("cannot project points with z <= 0")
    u = K.fx * p[..., 0] / z + K.cx
    v = K.fy * p[..., 1] / z + K.cy
    return np.stack([u, v], axis=-1)


# ---------------------------------------------------------------------------
# Calibration files
#
# Structured key-value text.  A camera file holds one intrinsics block and one
# or more extrinsic records (for averaging):
#
#     fx 1066.7
#     fy 1066.7
#     cx 523.0
#     cy 303.0
#     record
#     R  r11 r12 r13 r21 r22 r23 r31 r32 r33      (row-major)
#     t  tx ty tz                                  (millimeters)
#     record
#     ...
#
# A rig file holds a single R/t pair in the same format, without intrinsics.
# Lines starting with '#' are comments.  Intrinsics are in pixels and
# translations in millimeters; the unit choice is fixed by this format.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CameraCalibration:
    """Intrinsics plus one extrinsic record per calibration run."""

    intrinsics: Intrinsics
    records: tuple

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))


def _tokenize_calib(path) -> list:
    lines = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line.split())
    return lines


def _build_records(chunks, path):
    records = []
    for chunk in chunks:
        if set(chunk) != {"R", "t"}:
            raise FormatError(f"{path}: each record needs exactly one R and one t line")
        try:
            R = np.array([float(x) for x in chunk["R"]], dtype=np.float64).reshape(3, 3)
            t = np.array([float(x) for x in chunk["t"]], dtype=np.float64)
        except ValueError as exc:
            raise FormatError(f"{path}: malformed R/t values ({exc})") from None
        if len(chunk["R"]) != 9 or len(chunk["t"]) != 3:
            raise FormatError(f"{path}: R needs 9 values (row-major) and t needs 3")
        records.append((R, t))
    return records


def _parse_calib_text(path):
    """Returns (dict of intrinsic key -> value, list of (R, t) arrays)."""
    intr = {}
    chunks = []
    current = None
    for tokens in _tokenize_calib(path):
        key = tokens[0]
        if key == "record":
            current = {}
            chunks.append(current)
        elif key in ("fx", "fy", "cx", "cy"):
            if len(tokens) != 2:
                raise FormatError(f"{path}: '{key}' takes exactly one value")
            intr[key] = float(tokens[1])
        elif key in ("R", "t"):
            if current is None:
                # rig files omit the 'record' separator for their single record
                current = {}
                chunks.append(current)
            if key in current:
                raise FormatError(f"{path}: duplicate '{key}' inside one record")
            current[key] = tokens[1:]
        else:
            raise FormatError(f"{path}: unknown key '{key}'")
    return intr, _build_records(chunks, path)


def read_camera_file(path) -> CameraCalibration:
    """Read one camera's intrinsics and its extrinsic records."""
    intr, records = _parse_calib_text(path)
    missing = {"fx", "fy", "cx", "cy"} - set(intr)
    if missing:
        raise FormatError(f"{path}: missing intrinsics {sorted(missing)}")
    if not records:
        raise FormatError(f"{path}: no extrinsic records found")
    return CameraCalibration(
        intrinsics=Intrinsics(intr["fx"], intr["fy"], intr["cx"], intr["cy"]),
        records=tuple(Extrinsics(R, t) for R, t in records),
    )


def _floats(values) -> str:
    # repr of Python floats round-trips exactly; numpy scalars must be
    # unwrapped first or their repr is not parseable.
    return " ".join(repr(float(v)) for v in values)


def write_camera_file(path, calib: CameraCalibration) -> None:
    lines = ["# camera calibration: intrinsics in pixels, translations in millimeters"]
    k = calib.intrinsics
    lines += [f"fx {k.fx!r}", f"fy {k.fy!r}", f"cx {k.cx!r}", f"cy {k.cy!r}"]
    for rec in calib.records:
        lines.append("record")
        lines.append("R " + _floats(rec.R.ravel()))
        lines.append("t " + _floats(rec.t))
    Path(path).write_text("\n".join(lines) + "\n")


def read_rig_file(path) -> RigTransform:
    """Read a depth-to-stereo rig transform (single R/t record)."""
    intr, records = _parse_calib_text(path)
    if intr:
        raise FormatError(f"{path}: rig files carry no intrinsics")
    if len(records) != 1:
        raise FormatError(f"{path}: expected exactly one R/t record, found {len(records)}")
    return RigTransform(*records[0])


def write_rig_file(path, rig: RigTransform) -> None:
    lines = [
        "# rig transform: depth-camera frame -> stereo-left frame, translation in millimeters",
        "R " + _floats(rig.R.ravel()),
        "t " + _floats(rig.t),
    ]
    Path(path).write_text("\n".join(lines) + "\n")
