"""Stream-based block matching.

Instead of searching a window per reference block, the image is swept once
per offset: a differential image of squared pixel differences is streamed
over the region where all offsets stay in frame, block sums are formed
incrementally from row buffers (summed-area stencil with zero-valued
out-of-frame terms), and a bounded best-N structure per reference merges the
per-offset sum tables back into match lists. Half-plane offsets suffice:
each sum serves both endpoints of its block pair.
"""

from __future__ import annotations

import heapq
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .geometry import Region, snapped_grid
from .imaging import ImagePlane
from .match_oracle import (
    MatchEntry,
    MatchParams,
    MatchTable,
    apply_pixel_threshold,
    reference_grid,
)

THREADS_ENV = "BMSTREAM_THREADS"


@dataclass(frozen=True)
class Offset:
    """Half-plane block-pair offset: dr > 0, or dr == 0 with dc > 0."""

    dr: int
    dc: int

    def __post_init__(self):
        if not (self.dr > 0 or (self.dr == 0 and self.dc > 0)):
            raise ValueError(f"offset ({self.dr}, {self.dc}) is not in the half-plane")

    def mirrored(self) -> tuple[int, int]:
        return (-self.dr, -self.dc)


def half_plane_offsets(hw: int) -> list[Offset]:
    """All half-plane offsets within a half-window, enumerated row by row."""
    offs = [Offset(0, dc) for dc in range(1, hw + 1)]
    for dr in range(1, hw + 1):
        offs.extend(Offset(dr, dc) for dc in range(-hw, hw + 1))
    return offs


@dataclass
class SumTable:
    """Block-pair squared-difference sums for one offset, indexed by base top-left."""

    offset: Offset
    base_rows: np.ndarray
    base_cols: np.ndarray
    sums: np.ndarray  # (len(base_rows), len(base_cols))


@dataclass
class StreamState:
    """Instrumentation: elements held across stream steps by one worker."""

    diff_row_elems: int = 0
    sum_row_elems: int = 0
    peak_buffered: int = 0

    def record(self, diff_elems: int, sum_elems: int) -> None:
        self.diff_row_elems = diff_elems
        self.sum_row_elems = sum_elems
        self.peak_buffered = max(self.peak_buffered, diff_elems + sum_elems)


def overlap_region(width: int, height: int, hw: int, k: int) -> Region:
    """Base top-left rectangle where every half-plane offset lands fully in frame."""
    if width <= 2 * hw + k or height <= hw + k:
        raise ValueError(
            f"image {width}x{height} too small for window half-width {hw} and block {k}"
        )
    return Region(
        row_lo=0, row_hi=height - hw - k, col_lo=hw, col_hi=width - hw - k, k=k, hw=hw
    )


def diff_stream(img: ImagePlane, offset: Offset, region: Region) -> Iterator[np.ndarray]:
    """Stream the squared-difference rows for one offset over the region.

    Rows cover the pixel rectangle that feeds every base in the region
    (region extended by k-1 down and right); each pixel is read once.
    Integer-valued images stream int64 rows so downstream sums stay exact.
    """
    if offset.dr > region.hw or abs(offset.dc) > region.hw:
        raise ValueError(f"offset {offset} exceeds half-window {region.hw}")
    arr = img.pixels
    if img.is_integer_valued:
        arr = np.rint(arr).astype(np.int64)
    dr, dc = offset.dr, offset.dc
    c0 = region.col_lo
    c1 = c0 + region.pixel_cols
    for r in range(region.row_lo, region.row_lo + region.pixel_rows):
        base = arr[r, c0:c1]
        shifted = arr[r + dr, c0 + dc : c1 + dc]
        d = base - shifted
        yield d * d


def _sliding_sums(
    diffs: Iterable[np.ndarray], region: Region, k: int, state: StreamState | None
) -> tuple[np.ndarray, np.ndarray]:
    """Run the stencil over the stream; return (valid sums, full grid with warm-up).

    Per row the carried state is the last k diff rows plus one running row of
    vertical sums; the block sum at local (i, j) covers the k x k block ending
    there, with not-yet-available elements valued zero.
    """
    if k != region.k:
        raise ValueError(f"block size {k} does not match region (built for k={region.k})")
    n_rows, n_cols = region.pixel_rows, region.pixel_cols
    ring = None
    vrow = None
    full = None
    i = -1
    for i, row in enumerate(diffs):
        row = np.asarray(row)
        if row.ndim != 1 or row.shape[0] != n_cols:
            raise ValueError(
                f"stream row {i} has {row.shape} elements, region needs {n_cols}"
            )
        if i >= n_rows:
            raise ValueError(f"stream longer than region ({n_rows} rows expected)")
        if ring is None:
            ring = np.zeros((k, n_cols), dtype=row.dtype)
            vrow = np.zeros(n_cols, dtype=row.dtype)
            full = np.empty((n_rows, n_cols), dtype=row.dtype)
        vrow = vrow + row - ring[i % k]
        ring[i % k] = row
        wcum = np.cumsum(vrow)
        srow = wcum.copy()
        srow[k:] -= wcum[:-k]
        full[i] = srow
        if state is not None:
            state.record(ring.size, vrow.size)
    if i + 1 != n_rows:
        raise ValueError(f"stream ended after {i + 1} rows, region needs {n_rows}")
    valid = full[k - 1 :, k - 1 :]
    return valid, full


def sliding_block_sum(
    diffs: Iterable[np.ndarray],
    region: Region,
    k: int,
    offset: Offset,
    state: StreamState | None = None,
) -> SumTable:
    """Fold a diff stream into the table of valid k x k block sums.

    Only sums whose block lies fully inside the region are written back;
    warm-up values exist transiently in the recurrence but are discarded.
    """
    valid, _ = _sliding_sums(diffs, region, k, state)
    return SumTable(
        offset=offset,
        base_rows=np.arange(region.row_lo, region.row_hi + 1),
        base_cols=np.arange(region.col_lo, region.col_hi + 1),
        sums=valid.copy(),
    )


def sliding_sums_with_warmup(
    diffs: Iterable[np.ndarray], region: Region, k: int
) -> np.ndarray:
    """Full stencil output grid including warm-up rows/cols (for verification)."""
    _, full = _sliding_sums(diffs, region, k, None)
    return full


def stride_filter(table: SumTable, stride: int) -> SumTable:
    """Keep sums whose base sits on the stride grid, snapped to the region edges."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if stride == 1:
        return table
    rows = snapped_grid(int(table.base_rows[0]), int(table.base_rows[-1]), stride)
    cols = snapped_grid(int(table.base_cols[0]), int(table.base_cols[-1]), stride)
    ri = np.flatnonzero(np.isin(table.base_rows, rows))
    ci = np.flatnonzero(np.isin(table.base_cols, cols))
    return SumTable(
        offset=table.offset,
        base_rows=table.base_rows[ri],
        base_cols=table.base_cols[ci],
        sums=table.sums[np.ix_(ri, ci)],
    )


def plan_workers(params: MatchParams) -> list[list[Offset]]:
    """Group the half-plane offsets into passes of n_workers consecutive offsets."""
    if params.window_size % params.n_workers != 0:
        raise ValueError(
            f"window_size {params.window_size} must be a multiple of "
            f"n_workers {params.n_workers}"
        )
    offs = half_plane_offsets(params.half_window)
    n = params.n_workers
    return [offs[i : i + n] for i in range(0, len(offs), n)]


class BoundedBest:
    """Keep the N smallest keys seen, O(log N) per insertion (max-heap eviction)."""

    __slots__ = ("n", "_heap")

    def __init__(self, n: int):
        self.n = n
        self._heap: list[tuple] = []

    def push(self, key: tuple) -> None:
        neg = (-key[0], -key[1], -key[2], -key[3])
        if len(self._heap) < self.n:
            heapq.heappush(self._heap, neg)
        elif neg > self._heap[0]:
            heapq.heapreplace(self._heap, neg)

    def sorted_keys(self) -> list[tuple]:
        return sorted((-a, -b, -c, -d) for a, b, c, d in self._heap)


def pick_n_best(
    tables: Iterable[SumTable],
    params: MatchParams,
    width: int,
    height: int,
    region: Region,
) -> MatchTable:
    """Merge per-offset sum tables into per-reference best-N match lists.

    Each sum serves both endpoints of its pair: base b gains candidate b+o,
    and b+o gains the mirrored candidate b when b+o is itself a grid
    reference. The self-match is always present. The result is independent of
    the order tables arrive in (total candidate order breaks all ties).
    """
    k, n, tau = params.block_size, params.max_matches, params.tau
    k2 = float(k * k)
    rows, cols = reference_grid(height, width, k, params.stride, region)
    row_pos = {r: i for i, r in enumerate(rows)}
    col_pos = {c: j for j, c in enumerate(cols)}
    best = [[BoundedBest(n) for _ in cols] for _ in rows]
    for line in best:
        for b in line:
            b.push((0.0, 0, 0, 0))

    expected = {(o.dr, o.dc) for o in half_plane_offsets(region.hw)}
    seen: set[tuple[int, int]] = set()
    for st in tables:
        dr, dc = st.offset.dr, st.offset.dc
        seen.add((dr, dc))
        dist = st.sums / k2
        keep = dist <= tau
        base_ri = [row_pos.get(int(r)) for r in st.base_rows]
        base_ci = [col_pos.get(int(c)) for c in st.base_cols]
        if any(i is None for i in base_ri) or any(j is None for j in base_ci):
            raise ValueError("sum table bases do not lie on the reference grid")
        mir_ri = [row_pos.get(int(r) + dr) for r in st.base_rows]
        mir_ci = [col_pos.get(int(c) + dc) for c in st.base_cols]
        ndr, ndc = -dr, -dc
        for a in range(len(base_ri)):
            ia, ma = base_ri[a], mir_ri[a]
            drow = dist[a]
            krow = keep[a]
            brow = best[ia]
            for b in range(len(base_ci)):
                if not krow[b]:
                    continue
                d = float(drow[b])
                brow[base_ci[b]].push((d, 1, dr, dc))
                mb = mir_ci[b]
                if ma is not None and mb is not None:
                    best[ma][mb].push((d, 1, ndr, ndc))
    missing = expected - seen
    if missing:
        raise ValueError(f"missing offset coverage: {sorted(missing)[:4]}...")

    table = MatchTable(width=width, height=height, params=params)
    for i, r in enumerate(rows):
        for j, c in enumerate(cols):
            table.entries[(r, c)] = [
                MatchEntry(int(key[2]), int(key[3]), float(key[0]))
                for key in best[i][j].sorted_keys()
            ]
    return table


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def find_matches_stream(img: ImagePlane, params: MatchParams) -> MatchTable:
    """Run the full stream engine: diff, sum, stride, and best-N merge.

    Offset groups from the worker schedule are independent; they may be
    evaluated concurrently (thread count via the BMSTREAM_THREADS env var)
    and the merge result does not depend on execution order.
    """
    k, hw = params.block_size, params.half_window
    region = overlap_region(img.width, img.height, hw, k)
    work = img
    if params.lambda2d > 0:
        work = ImagePlane(apply_pixel_threshold(img.pixels, params.lambda2d, params.sigma))
    schedule = plan_workers(params)

    def one_offset(off: Offset) -> SumTable:
        st = sliding_block_sum(diff_stream(work, off, region), region, k, off)
        return stride_filter(st, params.stride)

    threads = _thread_count()

    def tables() -> Iterator[SumTable]:
        if threads <= 1:
            for group in schedule:
                for off in group:
                    yield one_offset(off)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for group in schedule:
                    yield from pool.map(one_offset, group)

    return pick_n_best(tables(), params, img.width, img.height, region)
