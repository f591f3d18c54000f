"""
Scoring disparity predictions: bad-delta, EPE, RMSE
===================================================

Metrics run over the pixels whose ground truth is effective (strictly
between 0 and d_max).  A prediction hole at an effective pixel fails every
bad-delta threshold and contributes the capped error d_max to EPE and RMSE,
so a matcher cannot improve its score by abstaining.
"""

import tempfile
from pathlib import Path

import numpy as np

from stereogt import dataset_io, matchers, metrics, oracle
from stereogt.metrics import EvalConfig
from stereogt.registration import DisparityMap

# the worked example: four pixels, one of which has no label (gt 0), and
# one prediction error above the 3 px threshold -> bad-3 = 1/3
gt = DisparityMap(np.array([[10, 10], [10, 0]], dtype=np.float32))
pred = DisparityMap(np.array([[10, 12], [14, 9]], dtype=np.float32))
print(f"2x2 example: bad-3 = {metrics.bad_delta(pred, gt, 3.0):.2f}%")
print(f"             EPE   = {metrics.epe(pred, gt):.4f}")
print(f"             RMSE  = {metrics.rmse(pred, gt):.4f} (always >= EPE)")

# a full report bundles the three bad thresholds with EPE/RMSE and density
scene = oracle.synth_stereo(
    oracle.SceneSpec(kind="constant", d_const=16.0, width=192, height=128, seed=2)
)
out = matchers.match_sgm(scene.left, scene.right, matchers.SgmConfig(d_max=32))
trimmed = scene.gt.data.copy()
trimmed[:3, :] = 0
trimmed[-3:, :] = 0
trimmed[:, :19] = 0
trimmed[:, -3:] = 0
report = metrics.evaluate_pair(out, DisparityMap(trimmed), EvalConfig(d_max=32.0))
print("\nSGM on a stereogram:")
print(metrics.format_report(report, name="scene"), end="")

# directory evaluation pairs files by stem and pools pixels across images,
# so large images weigh more than small ones (not a mean of per-image means)
root = Path(tempfile.mkdtemp())
(root / "pred").mkdir()
(root / "gt").mkdir()
rng = np.random.default_rng(4)
for stem, (h, w) in (("000000", (64, 96)), ("000001", (32, 48))):
    truth = rng.uniform(4.0, 28.0, (h, w)).astype(np.float32)
    noisy = (truth + rng.normal(0.0, 0.5, (h, w))).astype(np.float32)
    dataset_io.write_disparity_subpixel(root / "gt" / f"{stem}.tiff", DisparityMap(truth))
    dataset_io.write_disparity_subpixel(root / "pred" / f"{stem}.tiff", DisparityMap(noisy))
pooled = metrics.evaluate_set(root / "pred", root / "gt", EvalConfig(d_max=32.0))
print("\ntwo-image directory:")
print(metrics.format_report(pooled), end="")

# ground-truth distributions: histogram over valid pixels, ready for CSV
bimodal = oracle.synth_stereo(
    oracle.SceneSpec(kind="bimodal", d_near=24, d_far=8, width=256, height=160, seed=9)
)
hist = metrics.histogram(bimodal.gt, bin_width=1.0)
top = np.argsort(hist.frequencies)[-2:]
print(f"\nbimodal scene: range [{hist.d_min:.0f}, {hist.d_max_seen:.0f}] px, "
      f"modes at {sorted(int(hist.edges[i]) for i in top)} px")
print(metrics.histogram_csv(hist).splitlines()[0], "...")
