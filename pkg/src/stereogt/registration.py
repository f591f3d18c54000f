"""Register a depth camera's output into the stereo-left view as sub-pixel disparity.

The pipeline for one depth pixel is: backproject with the depth camera's
intrinsics, apply the rig transform, project with the stereo-left intrinsics,
round to the nearest output pixel, and store disparity b*f/Z computed from the
transformed point's z.  Colliding writes keep the nearest surface (smallest z).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import (
    DimensionError,
    EmptyRegistrationWarning,
    InvalidDepthError,
    InvalidDisparityError,
)


@dataclass(frozen=True)
class StereoGeometry:
    """Baseline (millimeters) and focal length (pixels) of the rectified stereo pair."""

    baseline_mm: float
    focal_px: float

    def __post_init__(self):
        if not (self.baseline_mm > 0 and np.isfinite(self.baseline_mm)):
            raise InvalidDepthError(f"baseline must be positive, got {self.baseline_mm}")
        if not (self.focal_px > 0 and np.isfinite(self.focal_px)):
            raise InvalidDepthError(f"focal length must be positive, got {self.focal_px}")


class DepthMap:
    """Per-pixel metric depth (millimeters) with a validity mask.

    Valid pixels carry Z > 0; invalid pixels are excluded from every
    downstream computation.
    """

    __slots__ = ("data", "valid")

    def __init__(self, data, valid=None):
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2:
            raise DimensionError(f"depth map must be 2-D, got shape {data.shape}")
        finite_positive = np.isfinite(data) & (data > 0)
        if valid is None:
            valid = finite_positive
        else:
            valid = np.asarray(valid, dtype=bool)
            if valid.shape != data.shape:
                raise DimensionError("validity mask shape differs from depth data")
            valid = valid & finite_positive
        self.data = data
        self.valid = valid

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


class DisparityMap:
    """Per-pixel disparity in pixels, stored in float32; 0.0 encodes invalid."""

    __slots__ = ("data",)

    def __init__(self, data):
        data = np.asarray(data, dtype=np.float32)
        if data.ndim != 2:
            raise DimensionError(f"disparity map must be 2-D, got shape {data.shape}")
        self.data = data

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.data) & (self.data > 0)

    @property
    def density(self) -> float:
        return density(self)

    @classmethod
    def zeros(cls, height: int, width: int) -> "DisparityMap":
        return cls(np.zeros((height, width), dtype=np.float32))


def depth_to_disparity(Z, geom: StereoGeometry):
    """Disparity d = b*f/Z for depth in millimeters; scalar or array."""
    Z = np.asarray(Z, dtype=np.float64)
    if np.any(Z <= 0) or not np.all(np.isfinite(Z)):
        raise InvalidDepthError("depth must be strictly positive and finite")
    d = geom.baseline_mm * geom.focal_px / Z
    return float(d) if d.ndim == 0 else d


def disparity_to_depth(d, geom: StereoGeometry):
    """Depth Z = b*f/d; exact algebraic inverse of depth_to_disparity."""
    d = np.asarray(d, dtype=np.float64)
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise InvalidDisparityError("disparity must be strictly positive and finite")
    Z = geom.baseline_mm * geom.focal_px / d
    return float(Z) if Z.ndim == 0 else Z


def register_depth(
    depth: DepthMap,
    rig: geometry.RigTransform,
    k_mech: geometry.Intrinsics,
    k_zed: geometry.Intrinsics,
    geom: StereoGeometry,
    out_w: int,
    out_h: int,
) -> DisparityMap:
    """Produce a dense sub-pixel disparity map in the stereo-left view.

    Target coordinates are rounded half-up to the nearest integer pixel; no
    splatting, so holes where nothing lands stay invalid (0.0).  When several
    depth pixels land on the same output pixel the smallest transformed z wins
    (the nearer surface occludes the farther one), which also makes the result
    independent of input processing order.  Points that end up at or behind
    the stereo camera plane are dropped.

    Emits :class:`EmptyRegistrationWarning` when every projected point misses
    the output bounds, which almost always means mismatched calibration.
    """
    if out_w <= 0 or out_h <= 0:
        raise DimensionError(f"output dimensions must be positive, got {out_w}x{out_h}")

    vs, us = np.nonzero(depth.valid)
    disparity = np.zeros((out_h, out_w), dtype=np.float32)
    if len(us) == 0:
        return DisparityMap(disparity)

    z_mech = depth.data[vs, us]
    pix = np.stack([us.astype(np.float64), vs.astype(np.float64)], axis=-1)
    pts = geometry.backproject(k_mech, pix, z_mech)
    pts = geometry.transform_point(rig, pts)

    in_front = pts[:, 2] > 0
    pts = pts[in_front]
    if len(pts):
        target = geometry.project(k_zed, pts)
        ut = np.floor(target[:, 0] + 0.5).astype(np.int64)
        vt = np.floor(target[:, 1] + 0.5).astype(np.int64)
        in_bounds = (ut >= 0) & (ut < out_w) & (vt >= 0) & (vt < out_h)
    else:
        in_bounds = np.zeros(0, dtype=bool)

    hits = int(np.count_nonzero(in_bounds))
    if hits == 0:
        warnings.warn(EmptyRegistrationWarning(0.0), stacklevel=2)
        return DisparityMap(disparity)

    flat = vt[in_bounds] * out_w + ut[in_bounds]
    z_zed = pts[in_bounds, 2]
    zbuf = np.full(out_h * out_w, np.inf, dtype=np.float64)
    np.minimum.at(zbuf, flat, z_zed)

    hit_mask = np.isfinite(zbuf)
    out = np.zeros(out_h * out_w, dtype=np.float32)
    out[hit_mask] = (geom.baseline_mm * geom.focal_px / zbuf[hit_mask]).astype(np.float32)
    return DisparityMap(out.reshape(out_h, out_w))


def density(d: DisparityMap) -> float:
    """Fraction of pixels carrying a valid disparity."""
    return float(np.count_nonzero(d.valid)) / d.data.size
