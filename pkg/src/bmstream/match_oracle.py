"""Brute-force block matching: the block-wise reference the stream engine is
checked against, and the match provider for the denoiser.

Distances are plain sums of squared differences over k x k patches, computed
directly per candidate (no incremental reuse), normalized by k^2. On
integer-valued images all sums are exact 64-bit integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .geometry import Region, snapped_grid
from .imaging import ImagePlane


@dataclass(frozen=True)
class MatchParams:
    """Block-matching tunables shared by the oracle and the stream engine."""

    block_size: int = 8
    window_size: int = 32
    max_matches: int = 16
    tau: float = math.inf
    lambda2d: float = 0.0
    sigma: float = 0.0
    stride: int = 1
    n_workers: int = 1

    def __post_init__(self):
        if self.block_size < 2:
            raise ValueError(f"block_size must be >= 2, got {self.block_size}")
        if self.window_size < 2 or self.window_size % 2 != 0:
            raise ValueError(f"window_size must be even and >= 2, got {self.window_size}")
        if self.max_matches < 1:
            raise ValueError(f"max_matches must be >= 1, got {self.max_matches}")
        if self.lambda2d < 0:
            raise ValueError(f"lambda2d must be >= 0, got {self.lambda2d}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.stride > self.block_size:
            raise ValueError(
                f"stride {self.stride} > block_size {self.block_size} would leave pixels uncovered"
            )
        if self.n_workers < 1:
            raise ValueError(f"n_workers must be >= 1, got {self.n_workers}")
        if self.window_size % self.n_workers != 0:
            raise ValueError(
                f"window_size {self.window_size} must be a multiple of n_workers {self.n_workers}"
            )

    @property
    def half_window(self) -> int:
        return self.window_size // 2


@dataclass(frozen=True, order=True)
class MatchEntry:
    """One candidate block: offset from the reference plus normalized distance."""

    dr: int
    dc: int
    dist: float


@dataclass
class MatchTable:
    """Per reference top-left, the ordered list of best candidate blocks.

    Lists are sorted ascending by distance; among equal distances the
    self-match comes first, then candidates in (dr, dc) row-major scan order.
    """

    width: int
    height: int
    params: MatchParams
    entries: dict[tuple[int, int], list[MatchEntry]] = field(default_factory=dict)

    def references(self) -> list[tuple[int, int]]:
        return sorted(self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatchTable):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.entries == other.entries
        )


@dataclass
class PatchStack:
    """3D group of k x k patches gathered by one match list, depth a power of two."""

    patches: np.ndarray  # (depth, k, k) float64
    positions: list[tuple[int, int]]

    def __post_init__(self):
        self.patches = np.asarray(self.patches, dtype=np.float64)
        if self.patches.ndim != 3 or self.patches.shape[1] != self.patches.shape[2]:
            raise ValueError(f"stack must be (depth, k, k), got {self.patches.shape}")
        d = self.patches.shape[0]
        if d < 1 or d & (d - 1):
            raise ValueError(f"stack depth must be a power of two, got {d}")
        if len(self.positions) != d:
            raise ValueError("positions length must equal stack depth")

    @property
    def depth(self) -> int:
        return self.patches.shape[0]

    @property
    def k(self) -> int:
        return self.patches.shape[1]


def sort_key(entry: MatchEntry) -> tuple:
    """Total order on candidates: distance, self-match first, then scan order."""
    return (entry.dist, 0 if (entry.dr == 0 and entry.dc == 0) else 1, entry.dr, entry.dc)


def apply_pixel_threshold(pixels: np.ndarray, lambda2d: float, sigma: float) -> np.ndarray:
    """Zero every value whose magnitude falls below lambda2d * sigma."""
    thr = lambda2d * sigma
    if thr <= 0:
        return pixels
    return np.where(np.abs(pixels) < thr, 0.0, pixels)


def _working_array(img: ImagePlane, lambda2d: float, sigma: float) -> np.ndarray:
    """Thresholded pixel array, as int64 when the image is integer-valued."""
    arr = apply_pixel_threshold(img.pixels, lambda2d, sigma)
    if img.is_integer_valued:
        return np.rint(arr).astype(np.int64)
    return np.asarray(arr, dtype=np.float64)


def patch_distance(
    img: ImagePlane,
    p: tuple[int, int],
    q: tuple[int, int],
    k: int,
    lambda2d: float = 0.0,
    sigma: float = 0.0,
) -> float:
    """Normalized quadratic distance between the k x k blocks at p and q."""
    h, w = img.height, img.width
    for (r, c) in (p, q):
        if not (0 <= r <= h - k and 0 <= c <= w - k):
            raise ValueError(f"block at ({r}, {c}) with k={k} falls outside the {w}x{h} frame")
    arr = _working_array(img, lambda2d, sigma)
    pa = arr[p[0] : p[0] + k, p[1] : p[1] + k]
    qa = arr[q[0] : q[0] + k, q[1] : q[1] + k]
    diff = pa - qa
    return float(np.sum(diff * diff)) / float(k * k)


def reference_grid(
    height: int, width: int, k: int, stride: int, region: Region | None = None
) -> tuple[list[int], list[int]]:
    """Strided reference rows/cols, snapped so the last block touches the far edge."""
    if region is None:
        return snapped_grid(0, height - k, stride), snapped_grid(0, width - k, stride)
    return (
        snapped_grid(region.row_lo, region.row_hi, stride),
        snapped_grid(region.col_lo, region.col_hi, stride),
    )


def find_matches_block(
    img: ImagePlane, params: MatchParams, *, region: Region | None = None
) -> MatchTable:
    """Exhaustive window search for every reference block on the stride grid.

    With `region` given, references are restricted to the strided grid inside
    that base region and candidates to the pairs the overlap-streaming engine
    can form: every half-plane offset from the reference, plus mirrored
    candidates whose own base lies on the grid. This is the configuration the
    stream engine is compared against. Without `region`, the full frame is
    matched and every in-frame window candidate is examined.
    """
    k, hw = params.block_size, params.half_window
    h, w = img.height, img.width
    if h < params.window_size + k or w < params.window_size + k:
        raise ValueError(
            f"image {w}x{h} smaller than window+block = {params.window_size + k}"
        )
    arr = _working_array(img, params.lambda2d, params.sigma)
    patches = sliding_window_view(arr, (k, k))
    rows, cols = reference_grid(h, w, k, params.stride, region)
    if region is not None:
        grid_rows = np.zeros(h, dtype=bool)
        grid_rows[rows] = True
        grid_cols = np.zeros(w, dtype=bool)
        grid_cols[cols] = True

    table = MatchTable(width=w, height=h, params=params)
    n, tau = params.max_matches, params.tau
    for r in rows:
        for c in cols:
            r0, r1 = max(0, r - hw), min(h - k, r + hw)
            c0, c1 = max(0, c - hw), min(w - k, c + hw)
            win = patches[r0 : r1 + 1, c0 : c1 + 1]
            diff = win - patches[r, c]
            dist = np.einsum("ijkl,ijkl->ij", diff, diff) / float(k * k)
            dr = np.arange(r0 - r, r1 - r + 1)[:, None]
            dc = np.arange(c0 - c, c1 - c + 1)[None, :]
            dr, dc = np.broadcast_arrays(dr, dc)
            dr, dc, dist = dr.ravel(), dc.ravel(), dist.astype(np.float64).ravel()
            is_self = (dr == 0) & (dc == 0)
            keep = (dist <= tau) | is_self
            if region is not None:
                pos_half = (dr > 0) | ((dr == 0) & (dc > 0))
                mirrored_base_on_grid = grid_rows[r + dr] & grid_cols[c + dc]
                keep &= is_self | pos_half | mirrored_base_on_grid
            dr, dc, dist = dr[keep], dc[keep], dist[keep]
            not_self = ((dr != 0) | (dc != 0)).astype(np.int8)
            order = np.lexsort((dc, dr, not_self, dist))[:n]
            table.entries[(r, c)] = [
                MatchEntry(int(dr[i]), int(dc[i]), float(dist[i])) for i in order
            ]
    return table


def gather_stack(img: ImagePlane, table: MatchTable, ref: tuple[int, int]) -> PatchStack:
    """Stack the matched patches for one reference, in match-list order.

    Depth is truncated to the largest power of two not exceeding the list
    length, so the depth-axis transform stays applicable.
    """
    if ref not in table.entries:
        raise ValueError(f"unknown reference {ref}")
    entries = table.entries[ref]
    depth = 1 << (len(entries).bit_length() - 1)
    k = table.params.block_size
    r, c = ref
    patches = np.empty((depth, k, k), dtype=np.float64)
    positions = []
    for i in range(depth):
        e = entries[i]
        patches[i] = img.pixels[r + e.dr : r + e.dr + k, c + e.dc : c + e.dc + k]
        positions.append((r + e.dr, c + e.dc))
    return PatchStack(patches, positions)
