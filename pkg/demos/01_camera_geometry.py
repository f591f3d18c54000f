"""
Pinhole cameras, extrinsics chaining, and rig averaging
=======================================================

A depth camera and a stereo camera are calibrated independently against the
same chessboard, so each comes with its own world-to-camera transform.
Chaining the two through the shared world frame yields the rig transform that
moves points from the depth camera straight into the stereo-left frame.
"""

import numpy as np
from scipy.spatial.transform import Rotation

from stereogt import geometry

rng = np.random.default_rng(7)

# a pinhole camera: focal lengths and principal point in pixels
k_depth = geometry.Intrinsics(fx=380.0, fy=380.0, cx=320.0, cy=240.0)
k_stereo = geometry.Intrinsics(fx=1050.0, fy=1050.0, cx=640.0, cy=360.0)
print("depth camera: ", k_depth)
print("stereo camera:", k_stereo)

# backprojection lifts a pixel plus its metric depth into 3-d; projection is
# the exact inverse
pixel = np.array([412.0, 266.0])
point = geometry.backproject(k_depth, pixel, 1500.0)
print("\npixel", pixel, "at depth 1500 mm ->", np.round(point, 2), "mm")
print("reprojected:", geometry.project(k_depth, point), "(round trip)")

# the true rig: the stereo camera sits 60 mm to the right of the depth
# camera and is rotated 2 degrees about the vertical axis
R_true = Rotation.from_euler("y", 2.0, degrees=True).as_matrix()
rig_true = geometry.RigTransform(R=R_true, t=np.array([60.0, 0.0, 5.0]))

# calibration never observes the rig directly; it produces one extrinsic
# record per camera per chessboard pose, all sharing the world frame
records_depth, records_stereo = [], []
for _ in range(3):
    R_w = Rotation.from_rotvec(rng.normal(0.0, 0.5, 3)).as_matrix()
    t_w = rng.normal(0.0, 400.0, 3)
    records_depth.append(geometry.Extrinsics(R_w, t_w))
    records_stereo.append(
        geometry.Extrinsics(rig_true.R @ R_w, rig_true.t + rig_true.R @ t_w)
    )

# chaining each record pair recovers the rig; averaging the chained results
# smooths per-record calibration noise (here they are exact, so the mean is
# the truth to machine precision)
chained = [
    geometry.chain_extrinsics(m, z)
    for m, z in zip(records_depth, records_stereo)
]
rig = geometry.average_rig(chained)
print("\nrecovered rig translation:", np.round(rig.t, 6), "mm")
print("rotation error:", float(np.abs(rig.R - rig_true.R).max()))

# a transform and its inverse cancel
p = rng.uniform(-500.0, 500.0, (4, 3)) + [0.0, 0.0, 2000.0]
back = geometry.transform_point(rig.inverse(), geometry.transform_point(rig, p))
print("inverse round-trip error:", float(np.abs(back - p).max()), "mm")

# rigs travel between tools as small text files
import tempfile
from pathlib import Path

out = Path(tempfile.mkdtemp()) / "rig.txt"
geometry.write_rig_file(out, rig)
print("\nrig file contents:")
print(out.read_text())
