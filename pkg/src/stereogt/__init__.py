"""Stereo ground-truth toolkit.

Builds sub-pixel disparity ground truth by registering a depth camera into a
rectified stereo left view, provides classical BM/SGM matching baselines, and
scores disparity predictions (bad-delta, EPE, RMSE).
"""

from . import calib_eval, dataset_io, errors, geometry, matchers, metrics, oracle, registration
from .dataset_io import (
    DatasetManifest,
    StereoSample,
    crop_random,
    load_sample,
    pad_to,
    read_depth,
    read_disparity,
    save_sample,
    write_depth,
    write_disparity_pixel,
    write_disparity_subpixel,
)
from .geometry import (
    Extrinsics,
    Intrinsics,
    RigTransform,
    average_rig,
    backproject,
    chain_extrinsics,
    project,
    transform_point,
)
from .matchers import BmConfig, CostVolume, SgmConfig, match_bm, match_sgm
from .metrics import (
    EvalConfig,
    MetricsReport,
    bad_delta,
    epe,
    evaluate_pair,
    evaluate_set,
    histogram,
    rmse,
    valid_mask,
)
from .oracle import SceneSpec, synth_depth_rig, synth_stereo
from .registration import (
    DepthMap,
    DisparityMap,
    StereoGeometry,
    density,
    depth_to_disparity,
    disparity_to_depth,
    register_depth,
)

__version__ = "0.1.0"
