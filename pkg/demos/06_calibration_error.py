"""
Measuring registration accuracy with chessboard corners
=======================================================

How good is the rig transform?  Hold a chessboard in front of both cameras,
detect its corners in each view, and lift every depth-camera corner through
the rig into the stereo-left image.  The pixel distance to the corner seen
there is the registration error; on a perfect rig it is zero, and each
millimeter of calibration drift shows up as focal/depth-scaled pixels.
"""

import numpy as np

from stereogt import calib_eval, geometry

k_depth = geometry.Intrinsics(fx=380.0, fy=380.0, cx=320.0, cy=240.0)
k_stereo = geometry.Intrinsics(fx=1050.0, fy=1050.0, cx=640.0, cy=360.0)
rig = geometry.RigTransform(R=np.eye(3), t=np.array([60.0, 0.0, 5.0]))


def board(rig, z0, rows=8, cols=11):
    # synthetic 8x11 chessboard, exactly consistent with the given rig
    us = np.linspace(120.0, 520.0, cols)
    vs = np.linspace(100.0, 380.0, rows)
    uu, vv = np.meshgrid(us, vs)
    mech_px = np.stack([uu.ravel(), vv.ravel()], axis=1)
    depths = np.full(rows * cols, z0)
    pts = geometry.backproject(k_depth, mech_px, depths)
    zed_px = geometry.project(k_stereo, geometry.transform_point(rig, pts))
    return calib_eval.CornerSet(
        mech_pixels=mech_px, mech_depths=depths, zed_pixels=zed_px,
        rows=rows, cols=cols,
    )


# consistent corners reproject exactly
corners = board(rig, z0=1000.0)
stats = calib_eval.registration_error(corners, rig, k_depth, k_stereo)
print(f"exact rig: mean {stats.mean:.2e} px over {corners.count} corners")

# a lateral calibration error of dt mm at board depth Z costs f*dt/Z pixels
print("\nlateral rig error at 1 m (predicted = 1050 * dt / 1000):")
for dt in (0.5, 1.0, 2.0, 4.0):
    bumped = geometry.RigTransform(R=rig.R, t=rig.t + [dt, 0.0, 0.0])
    stats = calib_eval.registration_error(corners, bumped, k_depth, k_stereo)
    print(f"  dt = {dt:3.1f} mm -> mean {stats.mean:.3f} px "
          f"(predicted {1050.0 * dt / 1000.0:.3f})")

# a measurement session pools several board poses: six trials, 88 corners
# each, reported per trial and overall
trials = [
    calib_eval.registration_error(
        board(rig, z0=900.0 + 60.0 * i),
        geometry.RigTransform(R=rig.R, t=rig.t + [1.0, 0.5, 0.0]),
        k_depth, k_stereo,
    )
    for i in range(6)
]
pooled = calib_eval.combine_trials(trials)
print(f"\nsix trials x 88 corners: per-trial means "
      f"{[f'{m:.2f}' for m in pooled.trial_means]} px")
print(f"pooled: mean {pooled.mean:.3f} px, max {pooled.max:.3f} px "
      f"over {pooled.errors.size} corners")

# corner sets travel as text files between the detector and this harness
import tempfile
from pathlib import Path

path = Path(tempfile.mkdtemp()) / "corners.txt"
calib_eval.write_corner_file(path, corners)
print("\ncorner file starts with:")
print("\n".join(path.read_text().splitlines()[:3]))
