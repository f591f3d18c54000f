"""Disparity evaluation: bad-delta percentages, EPE, RMSE, and histograms.

All metrics run over the pixels whose ground truth is effective, i.e. lies
strictly inside (0, d_max).  Predictions are expected to be dense there; a
hole (invalid prediction) at an effective pixel fails every bad-delta
threshold and contributes a capped error of d_max to EPE and RMSE, so
matchers cannot improve their score by abstaining.  Aggregation across
images pools pixels (weighting each image by its effective-pixel count)
rather than averaging per-image scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, EmptyEvaluationError, FormatError, PairingError
from .registration import DisparityMap

DEFAULT_DELTAS = (1.0, 3.0, 5.0)
DEFAULT_D_MAX = 256.0


@dataclass(frozen=True)
class EvalConfig:
    d_max: float = DEFAULT_D_MAX
    deltas: tuple = DEFAULT_DELTAS

    def __post_init__(self):
        if self.d_max <= 0:
            raise FormatError(f"d_max must be positive, got {self.d_max}")
        if not self.deltas:
            raise FormatError("at least one bad-delta threshold is required")
        if any(d <= 0 for d in self.deltas):
            raise FormatError(f"thresholds must be positive, got {self.deltas}")
        if list(self.deltas) != sorted(self.deltas) or len(set(self.deltas)) != len(self.deltas):
            raise FormatError(f"thresholds must be strictly ascending, got {self.deltas}")


@dataclass(frozen=True)
class MetricsReport:
    bad: dict
    epe: float
    rmse: float
    n_valid: int
    density: float
    per_image: tuple = ()


@dataclass(frozen=True)
class DisparityHistogram:
    edges: np.ndarray
    frequencies: np.ndarray
    d_min: float
    d_max_seen: float


def valid_mask(gt: DisparityMap, d_max: float = DEFAULT_D_MAX) -> np.ndarray:
    """Effective ground-truth pixels: finite and strictly inside (0, d_max)."""
    data = gt.data
    return np.isfinite(data) & (data > 0) & (data < d_max)


def _checked_mask(pred: DisparityMap, gt: DisparityMap, d_max: float) -> np.ndarray:
    if pred.data.shape != gt.data.shape:
        raise DimensionError(
            f"prediction {pred.data.shape} and ground truth {gt.data.shape} shapes differ"
        )
    mask = valid_mask(gt, d_max)
    if not mask.any():
        raise EmptyEvaluationError("no effective ground-truth pixels to evaluate")
    return mask


def bad_delta(pred: DisparityMap, gt: DisparityMap, delta: float, d_max: float = DEFAULT_D_MAX) -> float:
    """Percentage of effective pixels with |pred - gt| > delta or no prediction."""
    mask = _checked_mask(pred, gt, d_max)
    err = np.abs(pred.data.astype(np.float64) - gt.data.astype(np.float64))
    bad = (err > delta) | ~pred.valid
    n = int(np.count_nonzero(mask))
    return 100.0 * int(np.count_nonzero(bad & mask)) / n


def epe(pred: DisparityMap, gt: DisparityMap, d_max: float = DEFAULT_D_MAX) -> float:
    """Mean absolute error over effective pixels; holes contribute d_max."""
    mask = _checked_mask(pred, gt, d_max)
    err = np.abs(pred.data.astype(np.float64) - gt.data.astype(np.float64))
    err = np.where(pred.valid, err, float(d_max))
    sel = err[mask]
    return float(np.sum(sel)) / sel.size


def rmse(pred: DisparityMap, gt: DisparityMap, d_max: float = DEFAULT_D_MAX) -> float:
    """Root mean squared error over effective pixels; holes contribute d_max."""
    mask = _checked_mask(pred, gt, d_max)
    err = np.abs(pred.data.astype(np.float64) - gt.data.astype(np.float64))
    err = np.where(pred.valid, err, float(d_max))
    sel = err[mask]
    return math.sqrt(float(np.sum(sel * sel)) / sel.size)


def evaluate_pair(pred: DisparityMap, gt: DisparityMap, cfg: EvalConfig = EvalConfig()) -> MetricsReport:
    """Full report for a single prediction/ground-truth pair."""
    mask = _checked_mask(pred, gt, cfg.d_max)
    n = int(np.count_nonzero(mask))
    return MetricsReport(
        bad={d: bad_delta(pred, gt, d, cfg.d_max) for d in cfg.deltas},
        epe=epe(pred, gt, cfg.d_max),
        rmse=rmse(pred, gt, cfg.d_max),
        n_valid=n,
        density=n / mask.size,
    )


def histogram(gt: DisparityMap, bin_width: float = 1.0) -> DisparityHistogram:
    """Normalized disparity distribution over valid pixels."""
    if bin_width <= 0:
        raise FormatError(f"bin width must be positive, got {bin_width}")
    values = gt.data[gt.valid].astype(np.float64)
    if values.size == 0:
        raise EmptyEvaluationError("no valid pixels to build a histogram from")
    vmin, vmax = float(values.min()), float(values.max())
    lo = math.floor(vmin / bin_width) * bin_width
    nbins = max(1, math.ceil((vmax - lo) / bin_width + 1e-12))
    edges = lo + bin_width * np.arange(nbins + 1, dtype=np.float64)
    counts, edges = np.histogram(values, bins=edges)
    return DisparityHistogram(
        edges=edges,
        frequencies=counts / values.size,
        d_min=vmin,
        d_max_seen=vmax,
    )


def histogram_csv(hist: DisparityHistogram) -> str:
    """Delimiter-separated rows (bin_lo, bin_hi, frequency) for plotting."""
    lines = ["bin_lo,bin_hi,frequency"]
    for i, f in enumerate(hist.frequencies):
        lines.append(f"{hist.edges[i]:g},{hist.edges[i + 1]:g},{f:.6f}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Directory-level evaluation
# ---------------------------------------------------------------------------

_DISP_SUFFIXES = (".tiff", ".tif", ".png")


def _disparity_files(directory: Path) -> dict:
    files = {}
    for p in sorted(directory.iterdir()):
        if p.suffix.lower() in _DISP_SUFFIXES:
            # Prefer the sub-pixel TIFF when both encodings are present.
            if p.stem not in files or p.suffix.lower() != ".png":
                files[p.stem] = p
    return files


def evaluate_set(pred_dir, gt_dir, cfg: EvalConfig = EvalConfig()) -> MetricsReport:
    """Score every prediction in pred_dir against its same-stem ground truth.

    Returns the pixel-pooled aggregate; per-image reports ride along in
    ``per_image`` as (stem, report) pairs in sorted stem order.
    """
    from .dataset_io import read_disparity

    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    for d in (pred_dir, gt_dir):
        if not d.is_dir():
            raise PairingError(f"not a directory: {d}")
    preds = _disparity_files(pred_dir)
    gts = _disparity_files(gt_dir)
    if not preds:
        raise PairingError(f"no disparity files found in {pred_dir}")
    missing = sorted(set(preds) - set(gts))
    if missing:
        raise PairingError(f"no ground truth for: {', '.join(missing)}")

    per_image = []
    n_total = 0
    size_total = 0
    bad_counts = {d: 0 for d in cfg.deltas}
    sum_abs = 0.0
    sum_sq = 0.0
    for stem in sorted(preds):
        pred = read_disparity(preds[stem])
        gt = read_disparity(gts[stem])
        report = evaluate_pair(pred, gt, cfg)
        per_image.append((stem, report))

        mask = _checked_mask(pred, gt, cfg.d_max)
        err = np.abs(pred.data.astype(np.float64) - gt.data.astype(np.float64))
        hole = ~pred.valid
        err = np.where(hole, float(cfg.d_max), err)
        n = int(np.count_nonzero(mask))
        n_total += n
        size_total += mask.size
        for d in cfg.deltas:
            bad_counts[d] += int(np.count_nonzero(((err > d) | hole) & mask))
        sel = err[mask]
        sum_abs += float(np.sum(sel))
        sum_sq += float(np.sum(sel * sel))

    return MetricsReport(
        bad={d: 100.0 * bad_counts[d] / n_total for d in cfg.deltas},
        epe=sum_abs / n_total,
        rmse=math.sqrt(sum_sq / n_total),
        n_valid=n_total,
        density=n_total / size_total,
        per_image=tuple(per_image),
    )


def format_report(report: MetricsReport, name: str = "all") -> str:
    """Fixed-width text table, one row per image plus the aggregate."""
    deltas = sorted(report.bad)
    header = ["image"] + [f"bad-{d:g}(%)" for d in deltas] + ["EPE", "RMSE", "N"]
    rows = [(stem, r) for stem, r in report.per_image] + [(name, report)]
    widths = [max(len(header[0]), max(len(s) for s, _ in rows))]
    widths += [max(10, len(h)) for h in header[1:]]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    for stem, r in rows:
        cells = [stem.rjust(widths[0])]
        for i, d in enumerate(deltas):
            cells.append(f"{r.bad[d]:.2f}".rjust(widths[1 + i]))
        cells.append(f"{r.epe:.4f}".rjust(widths[-3]))
        cells.append(f"{r.rmse:.4f}".rjust(widths[-2]))
        cells.append(str(r.n_valid).rjust(widths[-1]))
        lines.append("  ".join(cells))
    return "\n".join(lines) + "\n"


def report_to_dict(report: MetricsReport) -> dict:
    """Machine-readable form (plain types only, suitable for JSON)."""
    out = {
        "bad": {f"{d:g}": v for d, v in sorted(report.bad.items())},
        "epe": report.epe,
        "rmse": report.rmse,
        "n_valid": report.n_valid,
        "density": report.density,
    }
    if report.per_image:
        out["per_image"] = {
            stem: report_to_dict(r) for stem, r in report.per_image
        }
    return out
