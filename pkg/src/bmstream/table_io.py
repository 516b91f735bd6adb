"""On-disk formats: BMT1 match tables (text) and SUM1 sum-table dumps (binary)."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .match_oracle import MatchEntry, MatchParams, MatchTable
from .match_stream import Offset, SumTable, overlap_region

BMT_MAGIC = "BMT1"
SUM_MAGIC = b"SUM1"
_SUM_HEADER = struct.Struct("<4sIIIii")  # magic, width, height, k, dr, dc


def write_match_table(table: MatchTable, path) -> None:
    """Write the line-oriented BMT1 format.

    Header: "BMT1 width height k wS N stride". Each reference contributes an
    "R r c m" line followed by m "M dr dc dist" lines, distances at six
    decimal places, references in row-major order.
    """
    p = table.params
    lines = [f"{BMT_MAGIC} {table.width} {table.height} {p.block_size} "
             f"{p.window_size} {p.max_matches} {p.stride}"]
    for (r, c) in table.references():
        entries = table.entries[(r, c)]
        lines.append(f"R {r} {c} {len(entries)}")
        lines.extend(f"M {e.dr} {e.dc} {e.dist:.6f}" for e in entries)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_match_table(path) -> MatchTable:
    """Parse a BMT1 file back into a MatchTable.

    Only the parameters carried by the header (k, wS, N, stride) are
    recovered; thresholds revert to defaults.
    """
    text = Path(path).read_text(encoding="ascii")
    lines = text.splitlines()
    if not lines:
        raise ValueError(f"{path}: empty table file")
    head = lines[0].split()
    if len(head) != 7 or head[0] != BMT_MAGIC:
        raise ValueError(f"{path}: bad header {lines[0]!r}")
    try:
        width, height, k, ws, n, stride = (int(x) for x in head[1:])
    except ValueError as exc:
        raise ValueError(f"{path}: non-integer header field") from exc
    params = MatchParams(
        block_size=k, window_size=ws, max_matches=n, stride=stride
    )
    table = MatchTable(width=width, height=height, params=params)
    i = 1
    while i < len(lines):
        parts = lines[i].split()
        if len(parts) != 4 or parts[0] != "R":
            raise ValueError(f"{path}:{i + 1}: expected reference line, got {lines[i]!r}")
        r, c, m = int(parts[1]), int(parts[2]), int(parts[3])
        entries = []
        for j in range(i + 1, i + 1 + m):
            if j >= len(lines):
                raise ValueError(f"{path}: truncated match list for ({r}, {c})")
            mp = lines[j].split()
            if len(mp) != 4 or mp[0] != "M":
                raise ValueError(f"{path}:{j + 1}: expected match line, got {lines[j]!r}")
            entries.append(MatchEntry(int(mp[1]), int(mp[2]), float(mp[3])))
        table.entries[(r, c)] = entries
        i += 1 + m
    return table


def write_sum_table(table: SumTable, width: int, height: int, k: int, path) -> None:
    """Dump one full-region sum table: fixed header then row-major uint32 sums."""
    sums = np.asarray(table.sums)
    if np.any(sums < 0) or np.any(sums > 0xFFFFFFFF):
        raise ValueError("sums do not fit unsigned 32-bit")
    if sums.dtype.kind == "f" and np.any(sums != np.rint(sums)):
        raise ValueError("non-integer sums cannot be dumped as uint32")
    header = _SUM_HEADER.pack(
        SUM_MAGIC, width, height, k, table.offset.dr, table.offset.dc
    )
    Path(path).write_bytes(header + sums.astype("<u4").tobytes())


def read_sum_table(path, hw: int) -> SumTable:
    """Load a SUM1 dump; the half-window is supplied to rebuild the base region."""
    raw = Path(path).read_bytes()
    if len(raw) < _SUM_HEADER.size:
        raise ValueError(f"{path}: truncated SUM1 header")
    magic, width, height, k, dr, dc = _SUM_HEADER.unpack_from(raw)
    if magic != SUM_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    region = overlap_region(width, height, hw, k)
    count = region.n_rows * region.n_cols
    payload = raw[_SUM_HEADER.size :]
    if len(payload) != 4 * count:
        raise ValueError(
            f"{path}: payload holds {len(payload) // 4} sums, region needs {count}"
        )
    sums = np.frombuffer(payload, dtype="<u4").reshape(region.n_rows, region.n_cols)
    return SumTable(
        offset=Offset(dr, dc),
        base_rows=np.arange(region.row_lo, region.row_hi + 1),
        base_cols=np.arange(region.col_lo, region.col_hi + 1),
        sums=sums.astype(np.int64),
    )
