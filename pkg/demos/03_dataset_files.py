"""
Dataset files: sub-pixel TIFF, 8-bit PNG, depth maps, and manifests
===================================================================

Ground truth is stored twice: a float32 TIFF that keeps every fractional
bit, and a plain 8-bit PNG for tools that only read integer disparities.
The value 0 encodes "no label" in both.
"""

import tempfile
from pathlib import Path

import numpy as np

from stereogt import dataset_io, oracle
from stereogt.registration import DisparityMap

root = Path(tempfile.mkdtemp())

# a disparity map with deliberately fractional values
rng = np.random.default_rng(3)
data = rng.uniform(8.0, 72.0, (60, 80)).astype(np.float32)
data[rng.random((60, 80)) < 0.1] = 0.0  # holes
disp = DisparityMap(data)

# the TIFF round trip is bit-exact
dataset_io.write_disparity_subpixel(root / "gt.tiff", disp)
back = dataset_io.read_disparity(root / "gt.tiff")
print("TIFF bit-exact:", np.array_equal(back.data, disp.data))

# the PNG stores round(d) and loses at most half a pixel
report = dataset_io.write_disparity_pixel(root / "gt.png", disp)
back = dataset_io.read_disparity(root / "gt.png")
print(f"PNG wrote {report.written_valid} labels, "
      f"max round-trip error {np.abs(back.data - disp.data).max():.3f} px")

# depth maps follow the same pattern: 16-bit millimeter PNG or float32 TIFF
depth_mm = np.full((60, 80), 1234.6)
dataset_io.write_depth(root / "depth.png", dataset_io.DepthMap(depth_mm))
print("depth PNG stores integer mm:",
      float(dataset_io.read_depth(root / "depth.png").data[0, 0]), "mm")

# a dataset is subsets x splits of numbered samples plus a manifest
manifest = dataset_io.DatasetManifest.default()
print("\nsubsets and sample counts:")
for name in dataset_io.SUBSETS:
    info = manifest.subsets[name]
    print(f"  {name:8s} {info.width}x{info.height}  "
          f"train/val/test = {info.train}/{info.validation}/{info.test}")

# build one sample on disk and load it back through the index
synth = oracle.synth_stereo(
    oracle.SceneSpec(kind="constant", d_const=12.0, width=1046, height=606)
)
sample = dataset_io.StereoSample(
    left=synth.left, right=synth.right, gt=synth.gt,
    subset="spinach", split="train", index=0,
)
dataset_io.save_sample(root, sample)
manifest.write(root / "manifest.txt")
loaded = dataset_io.load_sample(root, "spinach", "train", 0)
print(f"\nloaded sample: views {loaded.height}x{loaded.width}, "
      f"gt density {loaded.gt.density:.3f}")

# training-time helpers: seeded random crops and zero padding
crop = dataset_io.crop_random(loaded, 240, 320, seed=11)
print("random crop:", crop.height, "x", crop.width)
padded = dataset_io.pad_to(crop, 256, 352)
restored = dataset_io.unpad(padded, 240, 320)
print("pad + unpad restores the crop:",
      np.array_equal(restored.left, crop.left))
