"""
Registering a depth camera into the stereo-left view
====================================================

The ground-truth pipeline converts each valid depth pixel into a sub-pixel
disparity label in the stereo-left image: backproject, apply the rig
transform, project, round to the nearest stereo pixel, and keep the nearest
surface wherever two depth pixels land on the same target.
"""

import numpy as np
from scipy.spatial.transform import Rotation

from stereogt import geometry, oracle, registration

# a synthetic scene provides a depth map with a perfectly known disparity
# field: a ramp from 20 px (far) to 60 px (near)
spec = oracle.SceneSpec(kind="ramp", width=320, height=240, d_lo=20.0, d_hi=60.0)
rig = geometry.RigTransform.identity()
depth, (k_depth, k_stereo), expected = oracle.synth_depth_rig(spec, rig)
print(f"depth map {depth.height}x{depth.width}, "
      f"{int(depth.valid.sum())} valid px, "
      f"range [{depth.data[depth.valid].min():.0f}, {depth.data[depth.valid].max():.0f}] mm")

# with an identity rig every pixel maps onto itself, so the registered
# disparity reproduces the analytic field exactly (float32 quantization only)
disp = registration.register_depth(
    depth, rig, k_depth, k_stereo, spec.stereo_geometry, spec.width, spec.height
)
err = np.abs(disp.data - expected.data)
print(f"identity rig: density {registration.density(disp):.3f}, "
      f"max deviation from reference {err.max():.2e} px")

# a real rig has a baseline; pixels shift, some targets receive nothing
# (holes) and some receive two surfaces (the z-buffer keeps the nearer one)
rig = geometry.RigTransform(
    R=Rotation.from_euler("y", 1.0, degrees=True).as_matrix(),
    t=np.array([60.0, 2.0, 5.0]),
)
disp = registration.register_depth(
    depth, rig, k_depth, k_stereo, spec.stereo_geometry, spec.width, spec.height
)
print(f"offset rig:   density {registration.density(disp):.3f} "
      "(holes where no depth pixel lands)")

# the z-buffer rule on a hand-sized example: a near plane (columns 2-3)
# occludes the far plane after a 20 mm lateral shift
data = np.full((8, 8), 100.0)
data[:, 2:4] = 50.0
small = registration.DepthMap(data)
k = geometry.Intrinsics(fx=10.0, fy=10.0, cx=3.5, cy=3.5)
shift = geometry.RigTransform(R=np.eye(3), t=np.array([20.0, 0.0, 0.0]))
geom = registration.StereoGeometry(baseline_mm=120.0, focal_px=10.0)
out = registration.register_depth(small, shift, k, k, geom, 8, 8)
print("\ntwo-plane scene, one output row (0 = hole, near plane wins collisions):")
print(np.round(out.data[0], 1))

# disparity and depth are interchangeable given baseline and focal length
d = registration.depth_to_disparity(1000.0, geom)
print(f"\n1000 mm at b=120 mm, f=10 px -> {d:.2f} px -> "
      f"{registration.disparity_to_depth(d, geom):.0f} mm back")
