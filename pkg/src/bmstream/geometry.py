"""Shared geometry for block matching: base regions and strided grids."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Region:
    """Inclusive rectangle of valid base block top-left coordinates.

    Carries the block size `k` and half-window `hw` it was derived for, so
    downstream stages can recover the streamed pixel extent
    (rows row_lo..row_hi+k-1, cols col_lo..col_hi+k-1).
    """

    row_lo: int
    row_hi: int
    col_lo: int
    col_hi: int
    k: int
    hw: int

    @property
    def n_rows(self) -> int:
        return self.row_hi - self.row_lo + 1

    @property
    def n_cols(self) -> int:
        return self.col_hi - self.col_lo + 1

    @property
    def pixel_rows(self) -> int:
        """Row count of the pixel rectangle streamed to cover all bases."""
        return self.n_rows + self.k - 1

    @property
    def pixel_cols(self) -> int:
        return self.n_cols + self.k - 1

    def contains(self, r: int, c: int) -> bool:
        return self.row_lo <= r <= self.row_hi and self.col_lo <= c <= self.col_hi


def snapped_grid(lo: int, hi: int, stride: int) -> list[int]:
    """Positions lo, lo+stride, ... with hi appended when the last step misses it."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if hi < lo:
        raise ValueError(f"empty span [{lo}, {hi}]")
    grid = list(range(lo, hi + 1, stride))
    if grid[-1] != hi:
        grid.append(hi)
    return grid
