"""On-disk dataset layout, ground-truth file formats, and preprocessing.

Layout (enforced through the manifest):

    <root>/<subset>/<split>/left/<index>.png      8-bit RGB
    <root>/<subset>/<split>/right/<index>.png     8-bit RGB
    <root>/<subset>/<split>/disp/<index>.tiff     32-bit float, sub-pixel GT
    <root>/<subset>/<split>/disp/<index>.png      8-bit, pixel-level GT
    <root>/manifest.txt                           counts + resolutions

Indices are zero-padded to six digits.  Sub-pixel ground truth round-trips
bit-exactly through the float TIFF; the 8-bit PNG variant quantizes with
half-up rounding and is limited to disparities below 256.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    CorruptDatasetError,
    DimensionError,
    FormatError,
    NotFoundError,
    RangeOverflowError,
)
from .registration import DepthMap, DisparityMap

SUBSETS = ("spinach", "tomato", "pepper", "pumpkin")
SPLITS = ("train", "validation", "test")


@dataclass(frozen=True)
class SubsetInfo:
    train: int
    validation: int
    test: int
    width: int
    height: int

    def __post_init__(self):
        if min(self.train, self.validation, self.test) < 0:
            raise FormatError("sample counts must be non-negative")
        if self.width <= 0 or self.height <= 0:
            raise FormatError("resolution must be positive")

    def count(self, split: str) -> int:
        if split not in SPLITS:
            raise NotFoundError(f"unknown split '{split}', expected one of {SPLITS}")
        return getattr(self, split)

    @property
    def total(self) -> int:
        return self.train + self.validation + self.test


@dataclass(frozen=True)
class DatasetManifest:
    subsets: dict

    def info(self, subset: str) -> SubsetInfo:
        try:
            return self.subsets[subset]
        except KeyError:
            raise NotFoundError(f"unknown subset '{subset}'") from None

    def total(self, split: str) -> int:
        return sum(info.count(split) for info in self.subsets.values())

    @classmethod
    def default(cls) -> "DatasetManifest":
        return cls(
            subsets={
                "spinach": SubsetInfo(160, 40, 100, 1046, 606),
                "tomato": SubsetInfo(80, 20, 50, 1040, 603),
                "pepper": SubsetInfo(150, 30, 32, 1024, 571),
                "pumpkin": SubsetInfo(80, 20, 50, 1024, 571),
            }
        )

    @classmethod
    def read(cls, path) -> "DatasetManifest":
        subsets = {}
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            if len(tokens) != 6:
                raise FormatError(
                    f"{path}: manifest lines are 'subset train validation test width height', got {raw!r}"
                )
            name = tokens[0]
            try:
                nums = [int(t) for t in tokens[1:]]
            except ValueError:
                raise FormatError(f"{path}: non-integer manifest entry in {raw!r}") from None
            subsets[name] = SubsetInfo(*nums)
        if not subsets:
            raise FormatError(f"{path}: empty manifest")
        return cls(subsets=subsets)

    def write(self, path) -> None:
        lines = ["# subset train validation test width height"]
        for name, info in self.subsets.items():
            lines.append(
                f"{name} {info.train} {info.validation} {info.test} {info.width} {info.height}"
            )
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class StereoSample:
    """Rectified image pair plus optional ground-truth disparity."""

    left: np.ndarray
    right: np.ndarray
    gt: DisparityMap | None = None
    subset: str = ""
    split: str = ""
    index: int = 0

    def __post_init__(self):
        self.left = np.asarray(self.left)
        self.right = np.asarray(self.right)
        if self.left.shape != self.right.shape:
            raise DimensionError(
                f"left {self.left.shape} and right {self.right.shape} shapes differ"
            )
        if self.gt is not None and self.gt.data.shape != self.left.shape[:2]:
            raise DimensionError(
                f"ground truth {self.gt.data.shape} does not match images {self.left.shape[:2]}"
            )

    @property
    def height(self) -> int:
        return self.left.shape[0]

    @property
    def width(self) -> int:
        return self.left.shape[1]


# ---------------------------------------------------------------------------
# Disparity and depth files
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PixelWriteReport:
    """What the 8-bit writer did: how many valid disparities quantized to 0 (lost)."""

    path: str
    written_valid: int
    underflowed: int


def write_disparity_subpixel(path, d: DisparityMap) -> None:
    """Write sub-pixel ground truth as single-channel 32-bit float TIFF (lossless)."""
    Image.fromarray(np.ascontiguousarray(d.data, dtype=np.float32), mode="F").save(
        str(path), format="TIFF"
    )


def write_disparity_pixel(path, d: DisparityMap) -> PixelWriteReport:
    """Write pixel-level ground truth as single-channel 8-bit PNG.

    Valid values are rounded half-up; invalid pixels stay 0.  A valid
    disparity below 0.5 rounds to 0 and silently becomes invalid on read, so
    the count of such pixels is returned in the report.  Values that round to
    256 or above cannot be represented and raise.
    """
    valid = d.valid
    rounded = np.floor(d.data.astype(np.float64) + 0.5)
    rounded[~valid] = 0.0
    if np.any(rounded >= 256):
        worst = float(d.data[rounded >= 256].max())
        raise RangeOverflowError(
            f"disparity {worst:.3f} rounds to >= 256 and does not fit the 8-bit format"
        )
    underflow = int(np.count_nonzero(valid & (rounded == 0)))
    Image.fromarray(rounded.astype(np.uint8), mode="L").save(str(path), format="PNG")
    return PixelWriteReport(
        path=str(path),
        written_valid=int(np.count_nonzero(rounded > 0)),
        underflowed=underflow,
    )


def read_disparity(path) -> DisparityMap:
    """Read ground truth from 8-bit PNG or 32-bit float TIFF; 0 decodes as invalid."""
    path = Path(path)
    if not path.exists():
        raise NotFoundError(f"no such disparity file: {path}")
    img = Image.open(path)
    if img.format == "TIFF" and img.mode == "F":
        return DisparityMap(np.asarray(img, dtype=np.float32))
    if img.format == "PNG" and img.mode == "L":
        return DisparityMap(np.asarray(img, dtype=np.float32))
    raise FormatError(
        f"{path}: unsupported disparity format ({img.format}/{img.mode}); "
        "expected 8-bit PNG or 32-bit float TIFF"
    )


def write_depth(path, depth: DepthMap) -> None:
    """Write a depth map: 16-bit PNG (whole millimeters) or 32-bit float TIFF by extension."""
    path = Path(path)
    data = np.where(depth.valid, depth.data, 0.0)
    if path.suffix.lower() == ".png":
        rounded = np.floor(data + 0.5)
        if np.any(rounded >= 65536):
            raise RangeOverflowError("depth exceeds the 16-bit millimeter range")
        Image.fromarray(rounded.astype(np.uint16)).save(str(path), format="PNG")
    elif path.suffix.lower() in (".tif", ".tiff"):
        Image.fromarray(data.astype(np.float32), mode="F").save(str(path), format="TIFF")
    else:
        raise FormatError(f"{path}: depth files are .png (16-bit) or .tiff (float32)")


def read_depth(path) -> DepthMap:
    """Read a depth map from 16-bit PNG (millimeters, 0 = invalid) or float TIFF."""
    path = Path(path)
    if not path.exists():
        raise NotFoundError(f"no such depth file: {path}")
    img = Image.open(path)
    if img.format == "PNG" and img.mode in ("I", "I;16"):
        return DepthMap(np.asarray(img, dtype=np.float64))
    if img.format == "TIFF" and img.mode == "F":
        return DepthMap(np.asarray(img, dtype=np.float64))
    raise FormatError(
        f"{path}: unsupported depth format ({img.format}/{img.mode}); "
        "expected 16-bit PNG or 32-bit float TIFF"
    )


def read_view(path) -> np.ndarray:
    """Read a camera view as an (h, w, 3) uint8 array."""
    path = Path(path)
    if not path.exists():
        raise NotFoundError(f"no such image: {path}")
    img = Image.open(path)
    if img.mode != "RGB":
        img = img.convert("RGB")
    return np.asarray(img, dtype=np.uint8)


def rgb_to_gray(image) -> np.ndarray:
    """Standard luminance conversion to uint8; grayscale input passes through."""
    image = np.asarray(image)
    if image.ndim == 2:
        return image.astype(np.uint8, copy=False)
    if image.ndim == 3 and image.shape[2] == 3:
        w = np.array([0.299, 0.587, 0.114])
        return np.floor(image.astype(np.float64) @ w + 0.5).astype(np.uint8)
    raise DimensionError(f"expected HxW or HxWx3 image, got shape {image.shape}")


# ---------------------------------------------------------------------------
# Dataset tree
# ---------------------------------------------------------------------------


def sample_paths(root, subset: str, split: str, index: int) -> dict:
    base = Path(root) / subset / split
    stem = f"{index:06d}"
    return {
        "left": base / "left" / f"{stem}.png",
        "right": base / "right" / f"{stem}.png",
        "disp_subpixel": base / "disp" / f"{stem}.tiff",
        "disp_pixel": base / "disp" / f"{stem}.png",
    }


def load_manifest(root) -> DatasetManifest:
    """Manifest from <root>/manifest.txt, falling back to the built-in defaults."""
    path = Path(root) / "manifest.txt"
    return DatasetManifest.read(path) if path.exists() else DatasetManifest.default()


def load_sample(root, subset: str, split: str, index: int, manifest=None) -> StereoSample:
    """Load one sample, verifying the layout against the manifest."""
    manifest = manifest or load_manifest(root)
    info = manifest.info(subset)
    n = info.count(split)
    if not 0 <= index < n:
        raise NotFoundError(f"{subset}/{split} has {n} samples; index {index} is out of range")

    paths = sample_paths(root, subset, split, index)
    left = read_view(paths["left"])
    right = read_view(paths["right"])

    gt = None
    if paths["disp_subpixel"].exists():
        gt = read_disparity(paths["disp_subpixel"])
    elif paths["disp_pixel"].exists():
        gt = read_disparity(paths["disp_pixel"])

    expected = (info.height, info.width)
    for name, arr in (("left", left), ("right", right)):
        if arr.shape[:2] != expected:
            raise CorruptDatasetError(
                f"{paths[name]}: resolution {arr.shape[1]}x{arr.shape[0]} contradicts "
                f"manifest {info.width}x{info.height}"
            )
    if gt is not None and gt.data.shape != expected:
        raise CorruptDatasetError(
            f"{subset}/{split}/{index}: ground truth shape {gt.data.shape} contradicts manifest"
        )
    return StereoSample(left=left, right=right, gt=gt, subset=subset, split=split, index=index)


def save_sample(root, sample: StereoSample, subpixel: bool = True) -> None:
    """Write one sample into the dataset tree (creates directories as needed)."""
    paths = sample_paths(root, sample.subset, sample.split, sample.index)
    for p in paths.values():
        p.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(sample.left).save(str(paths["left"]), format="PNG")
    Image.fromarray(sample.right).save(str(paths["right"]), format="PNG")
    if sample.gt is not None:
        if subpixel:
            write_disparity_subpixel(paths["disp_subpixel"], sample.gt)
        else:
            write_disparity_pixel(paths["disp_pixel"], sample.gt)


# ---------------------------------------------------------------------------
# Preprocessing
# ---------------------------------------------------------------------------


def crop_random(s: StereoSample, h: int = 256, w: int = 512, seed=None) -> StereoSample:
    """Crop the same random window out of left, right and ground truth.

    Deterministic for a fixed seed; the window always lies fully inside the
    sample.
    """
    if h > s.height or w > s.width:
        raise DimensionError(
            f"crop {w}x{h} does not fit inside sample {s.width}x{s.height}"
        )
    rng = np.random.default_rng(seed)
    top = int(rng.integers(0, s.height - h + 1))
    left = int(rng.integers(0, s.width - w + 1))
    gt = None
    if s.gt is not None:
        gt = DisparityMap(s.gt.data[top : top + h, left : left + w].copy())
    return StereoSample(
        left=s.left[top : top + h, left : left + w].copy(),
        right=s.right[top : top + h, left : left + w].copy(),
        gt=gt,
        subset=s.subset,
        split=s.split,
        index=s.index,
    )


def pad_to(s: StereoSample, h: int = 608, w: int = 1056) -> StereoSample:
    """Zero-pad on the top and right sides only; content keeps the bottom-left corner.

    Ground-truth padding is written as invalid (0.0), so padded rows/columns
    never enter any metric.
    """
    if s.height > h or s.width > w:
        raise DimensionError(f"sample {s.width}x{s.height} exceeds pad target {w}x{h}")
    pad_rows = h - s.height
    pad_cols = w - s.width

    def _pad_img(img):
        widths = [(pad_rows, 0), (0, pad_cols)] + [(0, 0)] * (img.ndim - 2)
        return np.pad(img, widths, mode="constant")

    gt = None
    if s.gt is not None:
        gt = DisparityMap(_pad_img(s.gt.data))
    return StereoSample(
        left=_pad_img(s.left),
        right=_pad_img(s.right),
        gt=gt,
        subset=s.subset,
        split=s.split,
        index=s.index,
    )


def unpad(s: StereoSample, h: int, w: int) -> StereoSample:
    """Undo :func:`pad_to`: keep the bottom-left h x w region."""
    if h > s.height or w > s.width:
        raise DimensionError(f"cannot unpad {s.width}x{s.height} down to {w}x{h}")
    top = s.height - h
    gt = None
    if s.gt is not None:
        gt = DisparityMap(s.gt.data[top:, :w].copy())
    return StereoSample(
        left=s.left[top:, :w].copy(),
        right=s.right[top:, :w].copy(),
        gt=gt,
        subset=s.subset,
        split=s.split,
        index=s.index,
    )


def normalize_colors(image, means, stds) -> np.ndarray:
    """Per-channel (x - mean) / std, returned as float64."""
    image = np.asarray(image, dtype=np.float64)
    means = np.asarray(means, dtype=np.float64)
    stds = np.asarray(stds, dtype=np.float64)
    if np.any(stds <= 0):
        raise ZeroDivisionError("channel standard deviations must be strictly positive")
    return (image - means) / stds
