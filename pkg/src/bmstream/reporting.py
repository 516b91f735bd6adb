"""CSV and figure rendering for the report-producing subcommands."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .imaging import ImagePlane

MODEL_COLUMNS = [
    "width",
    "height",
    "window_size",
    "block_size",
    "n_channels",
    "clock_mhz",
    "passes",
    "match_time_s",
    "fps",
    "pixel_buffer_elements",
    "buffer_bytes_per_worker",
    "buffer_bytes_total",
    "bram_slots_per_worker",
]


def format_model_table(rows: list[dict]) -> str:
    """Fixed-width text table over the model report columns."""
    cols = ["n_channels", "passes", "match_time_s", "fps",
            "buffer_bytes_per_worker", "buffer_bytes_total", "bram_slots_per_worker"]
    heads = ["ch", "passes", "time_s", "fps", "buf/worker", "buf total", "bram/worker"]
    lines = ["  ".join(f"{h:>12}" for h in heads)]
    for row in rows:
        cells = []
        for c in cols:
            v = row[c]
            cells.append(f"{v:>12.4f}" if isinstance(v, float) else f"{v:>12}")
        lines.append("  ".join(cells))
    return "\n".join(lines)


def write_model_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=MODEL_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def save_model_figure(rows: list[dict], path, highlight_channels: int | None = None) -> None:
    """Matching time and frame rate against the worker-channel sweep."""
    ch = [r["n_channels"] for r in rows]
    t = [r["match_time_s"] for r in rows]
    fps = [r["fps"] for r in rows]
    fig, ax1 = plt.subplots(figsize=(6.4, 4.2))
    ax1.plot(ch, t, "o-", color="tab:blue", label="match time")
    ax1.set_xlabel("parallel channels")
    ax1.set_ylabel("time per frame [s]", color="tab:blue")
    ax1.set_xscale("log", base=2)
    ax1.set_yscale("log")
    ax2 = ax1.twinx()
    ax2.plot(ch, fps, "s--", color="tab:orange", label="frame rate")
    ax2.set_ylabel("frames per second", color="tab:orange")
    if highlight_channels is not None and highlight_channels in ch:
        i = ch.index(highlight_channels)
        ax1.axvline(highlight_channels, color="gray", lw=0.8, ls=":")
        ax1.annotate(f"{t[i]:.3f} s", (ch[i], t[i]),
                     textcoords="offset points", xytext=(6, 6))
    row = rows[0]
    ax1.set_title(
        f"{row['width']}x{row['height']}, window {row['window_size']}, "
        f"{row['clock_mhz']:.0f} MHz"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_comparison_figure(panels: list[tuple[str, ImagePlane]], path) -> None:
    """Side-by-side grayscale panels, e.g. clean / noisy / denoised."""
    n = len(panels)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.6))
    if n == 1:
        axes = [axes]
    for ax, (title, plane) in zip(axes, panels):
        ax.imshow(plane.pixels, cmap="gray", vmin=0, vmax=255, interpolation="nearest")
        ax.set_title(title, fontsize=10)
        ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def default_figure_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".png")
