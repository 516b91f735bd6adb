"""Analytic throughput and buffer model for the streamed matching stage.

One worker consumes one pixel per clock; a pass sweeps the whole frame for
n_channels offsets at once, and the half-plane offset count wS^2/2 fixes the
number of passes. Buffer sizes follow the stream pipeline: half a window of
raw pixel rows for the differencing stage, a block of squared-difference rows
plus one carried sum row for the stencil stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

PIXEL_BYTES = 1
SUM_BYTES = 4  # squared differences and running sums are 32-bit
BRAM_BITS = 18 * 1024  # 18 kbit block RAM slot


@dataclass(frozen=True)
class HwConfig:
    clock_hz: float = 250e6
    n_channels: int = 16
    width: int = 1280
    height: int = 720
    window_size: int = 32
    block_size: int = 8
    stride: int = 1

    def __post_init__(self):
        if self.clock_hz <= 0:
            raise ValueError("clock_hz must be > 0")
        if self.width < 1 or self.height < 1:
            raise ValueError("frame dimensions must be positive")
        if self.window_size < 2 or self.window_size % 2 != 0:
            raise ValueError(f"window_size must be even and >= 2, got {self.window_size}")
        if self.n_channels < 1:
            raise ValueError("n_channels must be >= 1")
        # up to one window row of channels must divide the row; beyond that,
        # whole extra rows run in parallel, so the row size must divide back
        if self.window_size % self.n_channels != 0 and self.n_channels % self.window_size != 0:
            raise ValueError(
                f"window_size {self.window_size} and n_channels {self.n_channels} "
                f"must divide one another"
            )
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


def half_plane_offset_count(window_size: int) -> int:
    hw = window_size // 2
    return hw + hw * (2 * hw + 1)


def estimate_match_time(cfg: HwConfig) -> float:
    """Seconds to produce all block-pair sums for one frame."""
    passes = math.ceil((cfg.window_size**2 / 2) / cfg.n_channels)
    return passes * (cfg.width * cfg.height) / cfg.clock_hz


def pixel_buffer_elements(cfg: HwConfig) -> int:
    """Raw pixels buffered by the differencing stage (half a window of rows)."""
    return cfg.window_size * cfg.width // 2


def estimate_buffer_bytes(cfg: HwConfig) -> int:
    """Per-worker buffer bytes: pixel rows, squared-difference rows, one sum row."""
    pix = PIXEL_BYTES * pixel_buffer_elements(cfg)
    diff_rows = SUM_BYTES * cfg.block_size * cfg.width
    sum_row = SUM_BYTES * cfg.width
    return pix + diff_rows + sum_row


def bram_slots(cfg: HwConfig) -> int:
    """Rough count of 18 kbit BRAM slots per worker (one allocation per buffer)."""
    parts_bits = (
        8 * PIXEL_BYTES * pixel_buffer_elements(cfg),
        8 * SUM_BYTES * cfg.block_size * cfg.width,
        8 * SUM_BYTES * cfg.width,
    )
    return sum(math.ceil(bits / BRAM_BITS) for bits in parts_bits)


def model_report(cfg: HwConfig) -> dict:
    """All derived figures for one configuration, ready for table/CSV output."""
    time_s = estimate_match_time(cfg)
    per_worker = estimate_buffer_bytes(cfg)
    return {
        "width": cfg.width,
        "height": cfg.height,
        "window_size": cfg.window_size,
        "block_size": cfg.block_size,
        "n_channels": cfg.n_channels,
        "clock_mhz": cfg.clock_hz / 1e6,
        "passes": math.ceil((cfg.window_size**2 / 2) / cfg.n_channels),
        "match_time_s": time_s,
        "fps": 1.0 / time_s,
        "pixel_buffer_elements": pixel_buffer_elements(cfg),
        "buffer_bytes_per_worker": per_worker,
        "buffer_bytes_total": per_worker * cfg.n_channels,
        "bram_slots_per_worker": bram_slots(cfg),
    }
