"""Ramp-image verification battery for the stream engine.

The ramp I(r, c) = c has fully predictable sums: for an offset (dr, dc) the
squared difference is dc^2 everywhere, so every complete block sum equals
k^2 * dc^2 and every warm-up sum grows with the zero-padded block area. The
battery checks those closed forms and full agreement with the block-wise
matcher.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .imaging import make_ramp_image
from .match_oracle import MatchParams, find_matches_block
from .match_stream import (
    SumTable,
    diff_stream,
    find_matches_stream,
    half_plane_offsets,
    overlap_region,
    sliding_block_sum,
    sliding_sums_with_warmup,
)

CorruptHook = Callable[[SumTable], SumTable]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def run_ramp_verification(
    size: int, params: MatchParams, corrupt: CorruptHook | None = None
) -> list[CheckResult]:
    """Run every ramp check at the given square size; returns one result each."""
    img = make_ramp_image(size, size)
    k, hw = params.block_size, params.half_window
    region = overlap_region(size, size, hw, k)
    offsets = half_plane_offsets(hw)
    results = []

    bad = 0
    first = ""
    for off in offsets:
        table = sliding_block_sum(diff_stream(img, off, region), region, k, off)
        if corrupt is not None:
            table = corrupt(table)
        expected = k * k * off.dc * off.dc
        if not np.all(table.sums == expected):
            bad += 1
            if not first:
                first = f"offset ({off.dr}, {off.dc}) expected {expected}"
    results.append(
        CheckResult(
            "constant-sum-per-offset",
            bad == 0,
            f"{len(offsets)} offsets checked" if bad == 0 else f"{bad} offsets wrong; {first}",
        )
    )

    bad = 0
    first = ""
    rows = np.minimum(np.arange(region.pixel_rows) + 1, k)
    cols = np.minimum(np.arange(region.pixel_cols) + 1, k)
    area = rows[:, None] * cols[None, :]
    for off in offsets:
        full = sliding_sums_with_warmup(diff_stream(img, off, region), region, k)
        if not np.all(full == area * (off.dc * off.dc)):
            bad += 1
            if not first:
                first = f"offset ({off.dr}, {off.dc})"
    results.append(
        CheckResult(
            "warmup-zero-padding",
            bad == 0,
            "partial sums follow the clipped block area"
            if bad == 0
            else f"{bad} offsets wrong; first {first}",
        )
    )

    stream_table = find_matches_stream(img, params)
    oracle_table = find_matches_block(img, params, region=region)
    same = stream_table == oracle_table
    results.append(
        CheckResult(
            "stream-matches-blockwise",
            same,
            f"{len(stream_table.entries)} references identical"
            if same
            else "match tables differ",
        )
    )
    return results
