"""Classical block-matching and semi-global stereo baselines.

Both matchers share the same three-stage shape: cost volume, winner-take-all,
validity filtering.

BM: sum of absolute differences over a square block (default 15), integer
winner-take-all, no refinement.  SGM: census transform over a fixed 5x5
window, Hamming distances summed over a small block (default 3), scanline
aggregation along 8 paths with penalties P1/P2 (defaults 216/864), parabola
sub-pixel refinement, and a left-right consistency check (default max
difference 1 px).

Costs are kept as int32 throughout; out-of-range disparity probes and pixels
without full block support carry a sentinel equal to the maximum achievable
cost, and border pixels are invalidated after matching.  All kernels are
single-threaded, so outputs are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .dataset_io import rgb_to_gray
from .errors import DimensionError, FormatError
from .registration import DisparityMap

CENSUS_RADIUS = 2  # 5x5 census window, 24-bit descriptors

# Aggregation adds at most p2 per path on top of the raw cost; int32 headroom
# for 8 paths requires a sane penalty bound.
MAX_PENALTY = 1 << 20

_PATHS_8 = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1))
_PATHS_4 = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class BmConfig:
    block_size: int = 15
    d_max: int = 256

    def __post_init__(self):
        if self.block_size < 3 or self.block_size % 2 == 0:
            raise FormatError(f"block_size must be odd and >= 3, got {self.block_size}")
        if not 0 < self.d_max <= 1024:
            raise FormatError(f"d_max must lie in (0, 1024], got {self.d_max}")


@dataclass(frozen=True)
class SgmConfig:
    block_size: int = 3
    p1: int = 216
    p2: int = 864
    lr_max_diff: float = 1.0
    d_max: int = 256
    num_paths: int = 8

    def __post_init__(self):
        if self.block_size < 1 or self.block_size % 2 == 0:
            raise FormatError(f"block_size must be odd and >= 1, got {self.block_size}")
        # p1 = p2 = 0 is allowed: zero penalties reduce aggregation to the raw
        # cost, which the tests rely on.
        if not 0 <= self.p1 <= self.p2 < MAX_PENALTY:
            raise FormatError(f"penalties need 0 <= p1 <= p2 < {MAX_PENALTY}")
        if self.lr_max_diff < 0:
            raise FormatError("lr_max_diff must be non-negative")
        if not 0 < self.d_max <= 1024:
            raise FormatError(f"d_max must lie in (0, 1024], got {self.d_max}")
        if self.num_paths not in (4, 8):
            raise FormatError(f"num_paths must be 4 or 8, got {self.num_paths}")


@dataclass(frozen=True)
class CostVolume:
    """(height, width, d_max) int32 matching costs; lower is better.

    ``margin`` is the border width without full block support; matchers mark
    it invalid.  Entries are non-negative, with out-of-bounds probes at the
    maximum achievable cost.
    """

    data: np.ndarray
    margin: int = 0

    def __post_init__(self):
        if self.data.ndim != 3:
            raise DimensionError(f"cost volume must be 3-d, got shape {self.data.shape}")
        if self.data.dtype != np.int32:
            raise FormatError(f"cost volume must be int32, got {self.data.dtype}")
        if self.data.size and int(self.data.min()) < 0:
            raise FormatError("cost volume entries must be non-negative")

    @property
    def d_max(self) -> int:
        return self.data.shape[2]


def _as_gray(image) -> np.ndarray:
    image = np.asarray(image)
    if image.ndim == 3:
        image = rgb_to_gray(image)
    if image.ndim != 2:
        raise DimensionError(f"expected a grayscale or RGB image, got shape {image.shape}")
    if image.dtype != np.uint8:
        raise FormatError(f"matchers take 8-bit images, got dtype {image.dtype}")
    return np.ascontiguousarray(image)


def _check_pair(lg: np.ndarray, rg: np.ndarray) -> None:
    if lg.shape != rg.shape:
        raise DimensionError(f"left {lg.shape} and right {rg.shape} dimensions differ")


# ---------------------------------------------------------------------------
# Cost volumes
# ---------------------------------------------------------------------------


@njit(cache=True)
def _census(gray, radius):
    h, w = gray.shape
    out = np.zeros((h, w), dtype=np.uint32)
    for y in range(radius, h - radius):
        for x in range(radius, w - radius):
            center = gray[y, x]
            code = np.uint32(0)
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    if dy == 0 and dx == 0:
                        continue
                    code = code << np.uint32(1)
                    if gray[y + dy, x + dx] < center:
                        code |= np.uint32(1)
            out[y, x] = code
    return out


@njit(cache=True)
def _census_cost_volume(cl, cr, d_max, box_r, census_r, sentinel):
    h, w = cl.shape
    margin = box_r + census_r
    cost = np.full((h, w, d_max), sentinel, dtype=np.int32)
    ham = np.zeros((h, w), dtype=np.int32)
    tmp = np.zeros((h, w), dtype=np.int32)
    for d in range(d_max):
        if w - d <= 2 * margin:
            break
        for y in range(census_r, h - census_r):
            for x in range(census_r + d, w - census_r):
                v = cl[y, x] ^ cr[y, x - d]
                # SWAR popcount on the 24 descriptor bits; the final fold adds
                # the per-byte counts explicitly because it must stay exact
                # even when scalar arithmetic is promoted past 32 bits
                v = v - ((v >> np.uint32(1)) & np.uint32(0x55555555))
                v = (v & np.uint32(0x33333333)) + ((v >> np.uint32(2)) & np.uint32(0x33333333))
                v = (v + (v >> np.uint32(4))) & np.uint32(0x0F0F0F0F)
                v = (v + (v >> np.uint32(8)) + (v >> np.uint32(16))) & np.uint32(0xFF)
                ham[y, x] = np.int32(v)
        for y in range(census_r, h - census_r):
            for x in range(margin + d, w - margin):
                s = np.int32(0)
                for bx in range(-box_r, box_r + 1):
                    s += ham[y, x + bx]
                tmp[y, x] = s
        for y in range(margin, h - margin):
            for x in range(margin + d, w - margin):
                s = np.int32(0)
                for by in range(-box_r, box_r + 1):
                    s += tmp[y + by, x]
                cost[y, x, d] = s
    return cost


def _sad_cost_volume(lg: np.ndarray, rg: np.ndarray, d_max: int, box_r: int) -> np.ndarray:
    h, w = lg.shape
    size = 2 * box_r + 1
    sentinel = np.int32(255 * size * size)
    cost = np.full((h, w, d_max), sentinel, dtype=np.int32)
    li = lg.astype(np.int32)
    ri = rg.astype(np.int32)
    for d in range(d_max):
        wd = w - d
        if wd < size:
            break
        diff = np.abs(li[:, d:] - ri[:, :wd])
        sat = np.zeros((h + 1, wd + 1), dtype=np.int64)
        sat[1:, 1:] = diff.cumsum(axis=0).cumsum(axis=1)
        box = sat[size:, size:] - sat[:-size, size:] - sat[size:, :-size] + sat[:-size, :-size]
        cost[box_r : h - box_r, box_r + d : w - box_r, d] = box.astype(np.int32)
    return cost


def compute_cost_volume(left, right, cfg) -> CostVolume:
    """Matching costs for every pixel and candidate disparity.

    Disparity d probes the right image at (x - d, y).  BM configs produce SAD
    over the block; SGM configs produce census Hamming distances summed over
    the block.
    """
    lg, rg = _as_gray(left), _as_gray(right)
    _check_pair(lg, rg)
    box_r = cfg.block_size // 2
    if isinstance(cfg, SgmConfig):
        cl = _census(lg, CENSUS_RADIUS)
        cr = _census(rg, CENSUS_RADIUS)
        margin = box_r + CENSUS_RADIUS
        bits = (2 * CENSUS_RADIUS + 1) ** 2 - 1
        sentinel = np.int32(bits * cfg.block_size * cfg.block_size)
        data = _census_cost_volume(cl, cr, cfg.d_max, box_r, CENSUS_RADIUS, sentinel)
        return CostVolume(data=data, margin=margin)
    if isinstance(cfg, BmConfig):
        return CostVolume(data=_sad_cost_volume(lg, rg, cfg.d_max, box_r), margin=box_r)
    raise FormatError(f"unsupported matcher config {type(cfg).__name__}")


# ---------------------------------------------------------------------------
# SGM path aggregation
# ---------------------------------------------------------------------------


@njit(cache=True)
def _aggregate_dir(cost, p1, p2, dx, dy, out):
    h, w, dnum = cost.shape
    prev_row = np.zeros((w, dnum), dtype=np.int32)
    prev_min = np.zeros(w, dtype=np.int32)
    cur_row = np.zeros((w, dnum), dtype=np.int32)
    cur_min = np.zeros(w, dtype=np.int32)

    yb, ye, yst = (0, h, 1) if dy >= 0 else (h - 1, -1, -1)
    xb, xe, xst = (0, w, 1) if dx >= 0 else (w - 1, -1, -1)
    first_row = True
    for y in range(yb, ye, yst):
        first_col = True
        for x in range(xb, xe, xst):
            px = x - dx
            if dy == 0:
                has_prev = not first_col
            else:
                has_prev = (not first_row) and 0 <= px < w
            if not has_prev:
                m = np.int32(2**30)
                for d in range(dnum):
                    c = cost[y, x, d]
                    cur_row[x, d] = c
                    out[y, x, d] += c
                    if c < m:
                        m = c
                cur_min[x] = m
            else:
                if dy == 0:
                    lp = cur_row[px]
                    mp = cur_min[px]
                else:
                    lp = prev_row[px]
                    mp = prev_min[px]
                cap = mp + p2
                m = np.int32(2**30)
                for d in range(dnum):
                    best = lp[d]
                    if d > 0 and lp[d - 1] + p1 < best:
                        best = lp[d - 1] + p1
                    if d < dnum - 1 and lp[d + 1] + p1 < best:
                        best = lp[d + 1] + p1
                    if cap < best:
                        best = cap
                    v = cost[y, x, d] + best - mp
                    cur_row[x, d] = v
                    out[y, x, d] += v
                    if v < m:
                        m = v
                cur_min[x] = m
            first_col = False
        if dy != 0:
            prev_row, cur_row = cur_row, prev_row
            prev_min, cur_min = cur_min, prev_min
        first_row = False


def aggregate_costs(cv: CostVolume, cfg: SgmConfig) -> CostVolume:
    """Sum the standard SGM scanline recurrence over the configured paths.

    Per path r:  L(p,d) = C(p,d) - min_k L(p-r,k)
                          + min(L(p-r,d), L(p-r,d-1)+P1, L(p-r,d+1)+P1,
                                min_k L(p-r,k)+P2)
    """
    paths = _PATHS_8 if cfg.num_paths == 8 else _PATHS_4
    out = np.zeros_like(cv.data)
    src = np.ascontiguousarray(cv.data)
    for dx, dy in paths:
        _aggregate_dir(src, np.int32(cfg.p1), np.int32(cfg.p2), dx, dy, out)
    return CostVolume(data=out, margin=cv.margin)


# ---------------------------------------------------------------------------
# Winner-take-all and filtering
# ---------------------------------------------------------------------------


@njit(cache=True)
def _wta(cost, margin, refine):
    h, w, dnum = cost.shape
    disp = np.zeros((h, w), dtype=np.float32)
    for y in range(margin, h - margin):
        for x in range(margin, w - margin):
            # Only disparities whose probe block fits in the right image are
            # candidates; ties go to the smaller disparity.
            cap = x - margin + 1
            if cap > dnum:
                cap = dnum
            if cap <= 0:
                continue
            best = cost[y, x, 0]
            bd = 0
            for d in range(1, cap):
                c = cost[y, x, d]
                if c < best:
                    best = c
                    bd = d
            val = np.float32(bd)
            if refine and 0 < bd < cap - 1:
                c0 = cost[y, x, bd - 1]
                c2 = cost[y, x, bd + 1]
                denom = c0 - 2 * best + c2
                if denom > 0:
                    val = np.float32(bd + (c0 - c2) / (2.0 * denom))
            disp[y, x] = val
    return disp


def match_bm(left, right, cfg: BmConfig = BmConfig()) -> DisparityMap:
    """Block matching: SAD winner-take-all at integer disparities."""
    cv = compute_cost_volume(left, right, cfg)
    return DisparityMap(_wta(cv.data, cv.margin, False))


def _sgm_left(lg: np.ndarray, rg: np.ndarray, cfg: SgmConfig) -> np.ndarray:
    cv = compute_cost_volume(lg, rg, cfg)
    agg = aggregate_costs(cv, cfg)
    return _wta(agg.data, agg.margin, True)


def match_sgm(left, right, cfg: SgmConfig = SgmConfig()) -> DisparityMap:
    """Census-cost SGM with sub-pixel refinement and a left-right check.

    The right-view disparity map needed for the consistency check comes from
    matching the horizontally mirrored pair and flipping the result back.
    """
    lg, rg = _as_gray(left), _as_gray(right)
    _check_pair(lg, rg)
    d_left = DisparityMap(_sgm_left(lg, rg, cfg))
    mirrored = _sgm_left(
        np.ascontiguousarray(rg[:, ::-1]), np.ascontiguousarray(lg[:, ::-1]), cfg
    )
    d_right = DisparityMap(np.ascontiguousarray(mirrored[:, ::-1]))
    return lr_consistency_check(d_left, d_right, cfg.lr_max_diff)


def lr_consistency_check(d_left: DisparityMap, d_right: DisparityMap, max_diff) -> DisparityMap:
    """Invalidate left pixels whose right-view counterpart disagrees.

    Pixel (x, y) survives iff |d_L(x, y) - d_R(x - d_L, y)| <= max_diff, with
    the right-view lookup at the nearest pixel.  Lookups falling outside the
    image count as an infinite difference, so max_diff = inf keeps everything.
    """
    if d_left.data.shape != d_right.data.shape:
        raise DimensionError(
            f"left {d_left.data.shape} and right {d_right.data.shape} shapes differ"
        )
    h, w = d_left.data.shape
    dl = d_left.data.astype(np.float64)
    xr = np.floor(np.arange(w, dtype=np.float64) - dl + 0.5).astype(np.int64)
    in_bounds = (xr >= 0) & (xr < w)
    rows = np.arange(h)[:, None]
    dr = d_right.data[rows, np.clip(xr, 0, w - 1)].astype(np.float64)
    diff = np.where(in_bounds, np.abs(dl - dr), math.inf)
    keep = d_left.valid & (diff <= max_diff)
    return DisparityMap(np.where(keep, d_left.data, np.float32(0.0)))
