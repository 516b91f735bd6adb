"""Image planes, PGM/PNG I/O, luma conversion, noise injection and PSNR."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

PSNR_CAP_DB = 99.0


@dataclass(frozen=True)
class ImagePlane:
    """Single-channel raster, row-major, real-valued with nominal range [0, 255].

    The pixel array is copied on construction and frozen, so planes are safe
    to share read-only across threads.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise ValueError(f"ImagePlane needs a 2D array, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"ImagePlane needs positive dimensions, got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def is_integer_valued(self) -> bool:
        """True when every pixel is an exact integer (enables exact integer sums)."""
        return bool(np.all(self.pixels == np.rint(self.pixels)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ImagePlane):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )


@dataclass(frozen=True)
class RgbImage:
    """Interleaved 8-bit RGB raster."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.uint8, copy=True)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"RgbImage needs an (H, W, 3) array, got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"RgbImage needs positive dimensions, got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def quantize_to_u8(plane: ImagePlane) -> np.ndarray:
    """Clamp to [0, 255] and round to the nearest integer (the save-time rule)."""
    return np.rint(np.clip(plane.pixels, 0.0, 255.0)).astype(np.uint8)


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _read_pgm(raw: bytes, path) -> ImagePlane:
    if not raw.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (missing P5 magic)")
    pos = 2
    fields = []
    while len(fields) < 3:
        m = _PGM_TOKEN.match(raw, pos)
        if m is None:
            raise ValueError(f"{path}: corrupt PGM header")
        tok = m.group(1)
        if not tok.isdigit():
            raise ValueError(f"{path}: corrupt PGM header token {tok!r}")
        fields.append(int(tok))
        pos = m.end()
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise ValueError(f"{path}: corrupt PGM header (bad dimensions)")
    if maxval > 255:
        raise ValueError(f"{path}: unsupported bit depth (maxval {maxval} > 255)")
    pos += 1  # single whitespace byte after maxval
    payload = raw[pos : pos + width * height]
    if len(payload) != width * height:
        raise ValueError(f"{path}: corrupt payload ({len(payload)} of {width * height} bytes)")
    data = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return ImagePlane(data)


def load_image(path) -> "ImagePlane | RgbImage":
    """Load a PGM (P5, 8-bit) or PNG (8-bit gray or RGB) file.

    Grayscale files come back as an ImagePlane, color PNGs as an RgbImage.
    """
    path = Path(path)
    raw = path.read_bytes()
    if raw.startswith(b"P5"):
        return _read_pgm(raw, path)
    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:
        raise ValueError(f"{path}: unreadable image ({exc})") from exc
    if img.mode == "L":
        return ImagePlane(np.asarray(img, dtype=np.uint8))
    if img.mode == "RGB":
        return RgbImage(np.asarray(img, dtype=np.uint8))
    raise ValueError(f"{path}: unsupported mode {img.mode} (need 8-bit gray or RGB)")


def save_image(img: "ImagePlane | RgbImage", path) -> None:
    """Write a plane as PGM/PNG or an RGB image as PNG. Values are clamp-quantized."""
    path = Path(path)
    if not path.parent.is_dir():
        raise OSError(f"{path.parent}: directory does not exist")
    suffix = path.suffix.lower()
    if isinstance(img, ImagePlane):
        data = quantize_to_u8(img)
        if suffix == ".pgm":
            header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
            path.write_bytes(header + data.tobytes())
        elif suffix == ".png":
            Image.fromarray(data, mode="L").save(path)
        else:
            raise ValueError(f"{path}: unsupported output format {suffix!r} for a plane")
    elif isinstance(img, RgbImage):
        if suffix != ".png":
            raise ValueError(f"{path}: RGB output must be PNG, got {suffix!r}")
        Image.fromarray(np.asarray(img.pixels), mode="RGB").save(path)
    else:
        raise TypeError(f"cannot save object of type {type(img).__name__}")


# ---------------------------------------------------------------------------
# Conversions, noise and metrics
# ---------------------------------------------------------------------------

LUMA_WEIGHTS = (0.299, 0.587, 0.114)  # BT.601 full-range


def rgb_to_luma(img: RgbImage) -> ImagePlane:
    """Extract the luminance channel (Y = 0.299 R + 0.587 G + 0.114 B)."""
    rgb = img.pixels.astype(np.float64)
    wr, wg, wb = LUMA_WEIGHTS
    return ImagePlane(wr * rgb[:, :, 0] + wg * rgb[:, :, 1] + wb * rgb[:, :, 2])


def add_wagn(img: ImagePlane, sigma: float, seed: int) -> ImagePlane:
    """Add white additive Gaussian noise of standard deviation `sigma`.

    Output stays real-valued and unclamped; clamping happens only at save time.
    Deterministic for a given seed.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return img
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=img.pixels.shape)
    return ImagePlane(img.pixels + noise)


def psnr(reference: ImagePlane, test: ImagePlane) -> float:
    """Peak signal-to-noise ratio in dB against a 255 peak; capped at 99 dB."""
    if reference.pixels.shape != test.pixels.shape:
        raise ValueError(
            f"dimension mismatch: {reference.pixels.shape} vs {test.pixels.shape}"
        )
    mse = float(np.mean((reference.pixels - test.pixels) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return 10.0 * np.log10(255.0**2 / mse)


def make_ramp_image(width: int, height: int) -> ImagePlane:
    """Build the verification ramp: every row runs 0, 1, ..., width-1."""
    if width < 1 or height < 1:
        raise ValueError(f"dimensions must be positive, got {width}x{height}")
    row = np.arange(width, dtype=np.float64)
    return ImagePlane(np.tile(row, (height, 1)))
