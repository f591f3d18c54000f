"""Registration-accuracy harness based on chessboard corner reprojection.

Each depth-camera corner (pixel position plus measured depth) is lifted into
3-d, moved through the rig transform, and projected into the stereo left
view; the Euclidean pixel distance to the corner detected there is the
registration error.  Corner detection itself is out of scope: corners arrive
in a plain text file produced by any external detector.

Corner file format ('#' starts a comment):

    grid 8 11
    u_mech v_mech Z_mech u_zed v_zed     one line per corner, row-major
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geometry
from .errors import BehindCameraError, FormatError


@dataclass(frozen=True)
class CornerSet:
    """Matched chessboard corners: depth-camera side and stereo-left side."""

    mech_pixels: np.ndarray  # (n, 2) float
    mech_depths: np.ndarray  # (n,) mm
    zed_pixels: np.ndarray  # (n, 2) float
    rows: int
    cols: int

    def __post_init__(self):
        object.__setattr__(self, "mech_pixels", np.asarray(self.mech_pixels, dtype=np.float64))
        object.__setattr__(self, "mech_depths", np.asarray(self.mech_depths, dtype=np.float64))
        object.__setattr__(self, "zed_pixels", np.asarray(self.zed_pixels, dtype=np.float64))
        n = self.rows * self.cols
        if self.rows <= 0 or self.cols <= 0:
            raise FormatError(f"grid shape must be positive, got {self.rows}x{self.cols}")
        if self.mech_pixels.shape != (n, 2) or self.zed_pixels.shape != (n, 2):
            raise FormatError(
                f"corner lists must hold rows*cols = {n} pixel pairs, got "
                f"{self.mech_pixels.shape} and {self.zed_pixels.shape}"
            )
        if self.mech_depths.shape != (n,):
            raise FormatError(f"expected {n} depths, got shape {self.mech_depths.shape}")
        if np.any(self.mech_depths <= 0) or not np.all(np.isfinite(self.mech_depths)):
            raise FormatError("corner depths must be finite and positive")

    @property
    def count(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class RegistrationErrorStats:
    errors: np.ndarray  # per-corner pixel distances, all trials pooled
    mean: float
    max: float
    trial_means: tuple

    def __post_init__(self):
        if np.any(self.errors < 0):
            raise FormatError("errors cannot be negative")


def registration_error(
    corners: CornerSet,
    rig: geometry.RigTransform,
    k_mech: geometry.Intrinsics,
    k_zed: geometry.Intrinsics,
) -> RegistrationErrorStats:
    """Reprojection error of every corner through the rig, in pixels."""
    pts = geometry.backproject(k_mech, corners.mech_pixels, corners.mech_depths)
    pts = geometry.transform_point(rig, pts)
    behind = np.nonzero(pts[:, 2] <= 0)[0]
    if behind.size:
        raise BehindCameraError(
            f"corner {int(behind[0])} lands behind the stereo camera (z <= 0)"
        )
    projected = geometry.project(k_zed, pts)
    errors = np.linalg.norm(projected - corners.zed_pixels, axis=1)
    return RegistrationErrorStats(
        errors=errors,
        mean=float(errors.mean()),
        max=float(errors.max()),
        trial_means=(float(errors.mean()),),
    )


def combine_trials(stats: list) -> RegistrationErrorStats:
    """Pool repeated trials; keeps each trial's own mean alongside."""
    if not stats:
        raise FormatError("no trials to combine")
    errors = np.concatenate([s.errors for s in stats])
    means = tuple(m for s in stats for m in s.trial_means)
    return RegistrationErrorStats(
        errors=errors,
        mean=float(errors.mean()),
        max=float(errors.max()),
        trial_means=means,
    )


# ---------------------------------------------------------------------------
# Corner files
# ---------------------------------------------------------------------------


def read_corner_file(path) -> CornerSet:
    path = Path(path)
    rows = cols = None
    mech, depths, zed = [], [], []
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "grid":
            if len(tokens) != 3:
                raise FormatError(f"{path}: grid lines are 'grid rows cols', got {raw!r}")
            rows, cols = int(tokens[1]), int(tokens[2])
            continue
        if len(tokens) != 5:
            raise FormatError(
                f"{path}: corner lines are 'u_mech v_mech Z_mech u_zed v_zed', got {raw!r}"
            )
        try:
            u0, v0, z, u1, v1 = (float(t) for t in tokens)
        except ValueError:
            raise FormatError(f"{path}: non-numeric corner entry in {raw!r}") from None
        mech.append((u0, v0))
        depths.append(z)
        zed.append((u1, v1))
    if rows is None:
        raise FormatError(f"{path}: missing 'grid rows cols' header")
    return CornerSet(
        mech_pixels=np.array(mech, dtype=np.float64).reshape(-1, 2),
        mech_depths=np.array(depths, dtype=np.float64),
        zed_pixels=np.array(zed, dtype=np.float64).reshape(-1, 2),
        rows=rows,
        cols=cols,
    )


def write_corner_file(path, corners: CornerSet) -> None:
    lines = [f"grid {corners.rows} {corners.cols}"]
    for (u0, v0), z, (u1, v1) in zip(
        corners.mech_pixels, corners.mech_depths, corners.zed_pixels
    ):
        lines.append(" ".join(repr(float(v)) for v in (u0, v0, z, u1, v1)))
    Path(path).write_text("\n".join(lines) + "\n")
