"""Command-line front end for the ground-truth pipeline.

Commands: calib-chain, calib-error, register, convert, match, evaluate,
analyze, synth.  Exit codes: 0 success, 1 pipeline failure, 2 usage error.
Defaults follow the reference configuration (d_max 256, BM block 15, SGM
block 3 with P1/P2 216/864 and LR max diff 1, thresholds 1,3,5) and the
effective configuration is echoed before each run.  The environment variable
STEREO_GT_ROOT supplies the default dataset root where one is accepted.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image

from . import calib_eval, dataset_io, geometry, matchers, metrics, oracle, registration
from .errors import CalibrationError, PairingError, StereoGTError


def _parse_deltas(text: str) -> tuple:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--deltas takes comma-separated numbers, got {text!r}")


def _parse_size(text: str) -> tuple:
    try:
        h, w = (int(t) for t in text.lower().split("x"))
        return h, w
    except ValueError:
        raise argparse.ArgumentTypeError(f"sizes are HxW, e.g. 256x512, got {text!r}")


def _announce(command: str, **settings) -> None:
    pairs = " ".join(f"{k}={v}" for k, v in settings.items())
    print(f"# {command}: {pairs}")


def _default_root() -> str:
    return os.environ.get("STEREO_GT_ROOT", ".")


def _map_jobs(fn, items, jobs: int) -> list:
    """Apply fn over items with bounded parallelism, preserving input order."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _outfile(path) -> Path:
    """Output file path with its parent directory created."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _cmd_calib_chain(args) -> int:
    mech = geometry.read_camera_file(args.mech)
    zed = geometry.read_camera_file(args.zed)
    if len(mech.records) != len(zed.records):
        raise CalibrationError(
            f"record counts differ: {len(mech.records)} (mech) vs {len(zed.records)} (zed)"
        )
    _announce("calib-chain", records=len(mech.records), out=args.out)
    rigs = [geometry.chain_extrinsics(m, z) for m, z in zip(mech.records, zed.records)]
    rig = geometry.average_rig(rigs)
    geometry.write_rig_file(_outfile(args.out), rig)
    print(f"wrote rig transform averaged over {len(rigs)} records to {args.out}")
    return 0


def _cmd_calib_error(args) -> int:
    rig = geometry.read_rig_file(args.rig)
    k_mech = geometry.read_camera_file(args.mech_calib).intrinsics
    k_zed = geometry.read_camera_file(args.zed_calib).intrinsics
    _announce("calib-error", trials=len(args.corners))
    trials = []
    for path in args.corners:
        corners = calib_eval.read_corner_file(path)
        stats = calib_eval.registration_error(corners, rig, k_mech, k_zed)
        trials.append(stats)
        print(
            f"{path}: {corners.rows}x{corners.cols} corners, "
            f"mean {stats.mean:.4f} px, max {stats.max:.4f} px"
        )
    combined = calib_eval.combine_trials(trials)
    print(f"overall: mean {combined.mean:.4f} px, max {combined.max:.4f} px")
    return 0


def _cmd_register(args) -> int:
    rig = geometry.read_rig_file(args.rig)
    mech = geometry.read_camera_file(args.mech_calib)
    zed = geometry.read_camera_file(args.zed_calib)
    focal = args.focal_px if args.focal_px is not None else zed.intrinsics.fx
    geom = registration.StereoGeometry(baseline_mm=args.baseline_mm, focal_px=focal)
    out_h, out_w = args.size
    _announce(
        "register",
        baseline_mm=geom.baseline_mm,
        focal_px=geom.focal_px,
        size=f"{out_h}x{out_w}",
        jobs=args.jobs,
    )

    depth_dir = Path(args.depth_dir)
    files = sorted(
        p for p in depth_dir.iterdir() if p.suffix.lower() in (".png", ".tif", ".tiff")
    )
    if not files:
        raise PairingError(f"no depth maps found in {depth_dir}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def _one(path: Path) -> str:
        depth = dataset_io.read_depth(path)
        disp = registration.register_depth(
            depth, rig, mech.intrinsics, zed.intrinsics, geom, out_w, out_h
        )
        out_path = out_dir / (path.stem + ".tiff")
        dataset_io.write_disparity_subpixel(out_path, disp)
        return f"{path.name}: density {registration.density(disp):.3f}"

    for line in _map_jobs(_one, files, args.jobs):
        print(line)
    return 0


def _cmd_convert(args) -> int:
    src, dst = Path(args.input), Path(args.output)
    if src.is_dir():
        files = sorted(p for p in src.iterdir() if p.suffix.lower() in (".png", ".tif", ".tiff"))
        if not files:
            raise PairingError(f"no disparity files found in {src}")
        dst.mkdir(parents=True, exist_ok=True)
        suffix = ".png" if files[0].suffix.lower() in (".tif", ".tiff") else ".tiff"
        pairs = [(p, dst / (p.stem + suffix)) for p in files]
    else:
        pairs = [(src, _outfile(dst))]
    _announce("convert", files=len(pairs))
    for inp, outp in pairs:
        d = dataset_io.read_disparity(inp)
        if outp.suffix.lower() == ".png":
            report = dataset_io.write_disparity_pixel(outp, d)
            note = f", {report.underflowed} valid px rounded to 0" if report.underflowed else ""
            print(f"{inp} -> {outp} (8-bit pixel{note})")
        else:
            dataset_io.write_disparity_subpixel(outp, d)
            print(f"{inp} -> {outp} (float32 sub-pixel)")
    return 0


def _matcher_config(args):
    if args.method == "bm":
        block = args.block_size if args.block_size is not None else 15
        return matchers.BmConfig(block_size=block, d_max=args.d_max)
    block = args.block_size if args.block_size is not None else 3
    return matchers.SgmConfig(
        block_size=block,
        p1=args.p1,
        p2=args.p2,
        lr_max_diff=args.lr_max_diff,
        d_max=args.d_max,
        num_paths=args.num_paths,
    )


def _cmd_match(args) -> int:
    cfg = _matcher_config(args)
    _announce("match", method=args.method, **{k: getattr(cfg, k) for k in cfg.__dataclass_fields__})

    left, right = Path(args.left), Path(args.right)
    if left.is_dir() != right.is_dir():
        raise PairingError("--left and --right must both be files or both be directories")
    if left.is_dir():
        stems_l = {p.stem: p for p in sorted(left.iterdir()) if p.suffix.lower() == ".png"}
        stems_r = {p.stem: p for p in sorted(right.iterdir()) if p.suffix.lower() == ".png"}
        missing = sorted(set(stems_l) - set(stems_r))
        if missing:
            raise PairingError(f"no right image for: {', '.join(missing)}")
        if not stems_l:
            raise PairingError(f"no images found in {left}")
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        pairs = [(stems_l[s], stems_r[s], out_dir / f"{s}.tiff") for s in sorted(stems_l)]
    else:
        pairs = [(left, right, _outfile(args.out))]

    def _one(pair) -> str:
        lp, rp, outp = pair
        sample = dataset_io.StereoSample(
            left=dataset_io.read_view(lp), right=dataset_io.read_view(rp)
        )
        if args.crop is not None:
            ch, cw = args.crop
            sample = dataset_io.crop_random(sample, ch, cw, seed=args.seed)
        orig_h, orig_w = sample.height, sample.width
        if args.pad is not None:
            ph, pw = args.pad
            sample = dataset_io.pad_to(sample, ph, pw)
        if args.method == "bm":
            disp = matchers.match_bm(sample.left, sample.right, cfg)
        else:
            disp = matchers.match_sgm(sample.left, sample.right, cfg)
        if args.pad is not None:
            padded = dataset_io.StereoSample(
                left=sample.left, right=sample.right, gt=disp
            )
            disp = dataset_io.unpad(padded, orig_h, orig_w).gt
        dataset_io.write_disparity_subpixel(outp, disp)
        return f"{outp}: density {registration.density(disp):.3f}"

    for line in _map_jobs(_one, pairs, args.jobs):
        print(line)
    return 0


def _cmd_evaluate(args) -> int:
    cfg = metrics.EvalConfig(d_max=args.d_max, deltas=args.deltas)
    _announce("evaluate", d_max=cfg.d_max, deltas=",".join(f"{d:g}" for d in cfg.deltas))
    report = metrics.evaluate_set(args.pred_dir, args.gt_dir, cfg)
    table = metrics.format_report(report)
    print(table, end="")
    if args.report:
        _outfile(args.report).write_text(table)
    if args.json:
        _outfile(args.json).write_text(json.dumps(metrics.report_to_dict(report), indent=2) + "\n")
    return 0


def _cmd_analyze(args) -> int:
    if args.gt_dir:
        gt_dir = Path(args.gt_dir)
    elif args.subset:
        gt_dir = Path(args.root) / args.subset / args.split / "disp"
    else:
        raise PairingError("analyze needs --gt-dir or --subset")
    files = sorted(p for p in gt_dir.iterdir() if p.suffix.lower() in (".png", ".tif", ".tiff"))
    if not files:
        raise PairingError(f"no disparity files found in {gt_dir}")
    _announce("analyze", files=len(files), bin_width=args.bin_width)

    valid = 0
    total = 0
    pooled = []
    for path in files:
        d = dataset_io.read_disparity(path)
        valid += int(np.count_nonzero(d.valid))
        total += d.data.size
        pooled.append(d.data[d.valid])
    hist = metrics.histogram(
        registration.DisparityMap(np.concatenate(pooled).reshape(1, -1)), args.bin_width
    )
    print(f"maps: {len(files)}  density: {valid / total:.4f}")
    print(f"valid disparity range: [{hist.d_min:.3f}, {hist.d_max_seen:.3f}]")
    csv = metrics.histogram_csv(hist)
    if args.csv:
        Path(args.csv).write_text(csv)
        print(f"histogram written to {args.csv}")
    else:
        print(csv, end="")
    return 0


def _cmd_synth(args) -> int:
    if args.spec_file:
        spec = oracle.read_scene_file(args.spec_file)
        if args.seed is not None:
            spec = dataclasses.replace(spec, seed=args.seed)
    else:
        h, w = args.size
        kwargs = dict(
            kind=args.kind,
            width=w,
            height=h,
            density=args.density,
            seed=args.seed if args.seed is not None else 0,
            baseline_mm=args.baseline_mm,
            focal_px=args.focal_px,
        )
        for name in ("d_const", "d_lo", "d_hi", "d_near", "d_far"):
            value = getattr(args, name)
            if value is not None:
                kwargs[name] = value
        spec = oracle.SceneSpec(**kwargs)
    _announce("synth", kind=spec.kind, size=f"{spec.height}x{spec.width}", seed=spec.seed)

    out = Path(args.out_dir)
    for sub in ("left", "right", "gt", "depth"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    sample = oracle.synth_stereo(spec)
    rig = geometry.RigTransform.identity()
    depth, (k_mech, k_zed), _ = oracle.synth_depth_rig(spec, rig)

    stem = "000000"
    Image.fromarray(sample.left).save(str(out / "left" / f"{stem}.png"), format="PNG")
    Image.fromarray(sample.right).save(str(out / "right" / f"{stem}.png"), format="PNG")
    dataset_io.write_disparity_subpixel(out / "gt" / f"{stem}.tiff", sample.gt)
    dataset_io.write_depth(out / "depth" / f"{stem}.tiff", depth)
    oracle.write_scene_file(out / "scene.txt", spec)
    geometry.write_rig_file(out / "rig.txt", rig)
    for name, k in (("mech.txt", k_mech), ("zed.txt", k_zed)):
        geometry.write_camera_file(
            out / name, geometry.CameraCalibration(intrinsics=k, records=(geometry.Extrinsics.identity(),))
        )
    print(f"scene written under {out} (views, gt, depth, rig and calibration files)")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_match_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=("bm", "sgm"), required=True)
    p.add_argument("--block-size", type=int, default=None, help="BM default 15, SGM default 3")
    p.add_argument("--p1", type=int, default=216)
    p.add_argument("--p2", type=int, default=864)
    p.add_argument("--lr-max-diff", type=float, default=1.0)
    p.add_argument("--d-max", type=int, default=256)
    p.add_argument("--num-paths", type=int, choices=(4, 8), default=8)
    p.add_argument("--crop", type=_parse_size, default=None, metavar="HxW")
    p.add_argument("--pad", type=_parse_size, default=None, metavar="HxW")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stereogt",
        description="Stereo ground-truth generation, matching baselines, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calib-chain", help="chain per-record extrinsics and average into a rig file")
    p.add_argument("--mech", required=True, help="depth-camera calibration file")
    p.add_argument("--zed", required=True, help="stereo-left calibration file")
    p.add_argument("--out", required=True, help="output rig file")
    p.set_defaults(func=_cmd_calib_chain)

    p = sub.add_parser("calib-error", help="corner reprojection error of a rig")
    p.add_argument("corners", nargs="+", help="corner files, one per trial")
    p.add_argument("--rig", required=True)
    p.add_argument("--mech-calib", required=True)
    p.add_argument("--zed-calib", required=True)
    p.set_defaults(func=_cmd_calib_error)

    p = sub.add_parser("register", help="batch-convert depth maps to disparity ground truth")
    p.add_argument("--depth-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--rig", required=True)
    p.add_argument("--mech-calib", required=True)
    p.add_argument("--zed-calib", required=True)
    p.add_argument("--baseline-mm", type=float, required=True)
    p.add_argument("--focal-px", type=float, default=None, help="defaults to the stereo fx")
    p.add_argument("--size", type=_parse_size, required=True, metavar="HxW", help="output size")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_register)

    p = sub.add_parser("convert", help="transcode sub-pixel TIFF <-> 8-bit PNG ground truth")
    p.add_argument("input", help="disparity file or directory")
    p.add_argument("output", help="output file or directory")
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("match", help="run BM or SGM on a pair or directory of pairs")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--out", required=True, help="output disparity file or directory")
    _add_match_flags(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="crop window seed")
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--d-max", type=float, default=256)
    p.add_argument("--deltas", type=_parse_deltas, default=(1.0, 3.0, 5.0))
    p.add_argument("--report", default=None, help="also write the table to this file")
    p.add_argument("--json", default=None, help="also write machine-readable results")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("analyze", help="disparity density and distribution")
    p.add_argument("--gt-dir", default=None)
    p.add_argument("--subset", default=None, choices=dataset_io.SUBSETS)
    p.add_argument("--split", default="train", choices=dataset_io.SPLITS)
    p.add_argument("--root", default=_default_root(), help="dataset root (env STEREO_GT_ROOT)")
    p.add_argument("--bin-width", type=float, default=1.0)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("synth", help="generate a synthetic scene with exact ground truth")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--kind", choices=oracle.KINDS, default="ramp")
    p.add_argument("--size", type=_parse_size, default=(512, 512), metavar="HxW")
    p.add_argument("--d-const", type=float, default=None)
    p.add_argument("--d-lo", type=float, default=None)
    p.add_argument("--d-hi", type=float, default=None)
    p.add_argument("--d-near", type=float, default=None)
    p.add_argument("--d-far", type=float, default=None)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--baseline-mm", type=float, default=120.0)
    p.add_argument("--focal-px", type=float, default=1104.0)
    p.add_argument("--spec-file", default=None, help="read the scene from a spec file instead")
    p.set_defaults(func=_cmd_synth)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    try:
        return args.func(args)
    except StereoGTError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
