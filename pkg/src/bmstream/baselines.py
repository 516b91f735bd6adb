"""Classical spatial denoisers used as comparison baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve

from .imaging import ImagePlane


@dataclass(frozen=True)
class FilterParams:
    sigma_s: float  # spatial std-dev, pixels
    sigma_r: float  # range std-dev, intensity
    radius: int  # kernel half-width

    def __post_init__(self):
        if self.sigma_s <= 0 or self.sigma_r <= 0:
            raise ValueError("sigma_s and sigma_r must be > 0")
        if self.radius < 1:
            raise ValueError(f"radius must be >= 1, got {self.radius}")


def default_radius(sigma_s: float) -> int:
    return max(1, math.ceil(3.0 * sigma_s))


def gaussian_kernel(sigma_s: float, radius: int) -> np.ndarray:
    """Truncated, normalized 2D Gaussian on the integer grid [-radius, radius]."""
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    dy, dx = np.meshgrid(ax, ax, indexing="ij")
    g = np.exp(-(dy * dy + dx * dx) / (2.0 * sigma_s * sigma_s))
    g /= 2.0 * np.pi * sigma_s * sigma_s
    return g / g.sum()


def gaussian_smooth(img: ImagePlane, sigma_s: float, radius: int | None = None) -> ImagePlane:
    """Low-pass the plane with a truncated Gaussian kernel, mirror-padded edges."""
    if sigma_s <= 0:
        raise ValueError("sigma_s must be > 0")
    if radius is None:
        radius = default_radius(sigma_s)
    kern = gaussian_kernel(sigma_s, radius)
    return ImagePlane(convolve(img.pixels, kern, mode="mirror"))


def bilateral_filter(img: ImagePlane, params: FilterParams) -> ImagePlane:
    """Edge-preserving weighted average: spatial Gaussian times range Gaussian,
    renormalized per pixel."""
    a = img.pixels
    r = params.radius
    padded = np.pad(a, r, mode="reflect")
    acc = np.zeros_like(a)
    wsum = np.zeros_like(a)
    inv2ss = 1.0 / (2.0 * params.sigma_s * params.sigma_s)
    inv2sr = 1.0 / (2.0 * params.sigma_r * params.sigma_r)
    h, w = a.shape
    for dy in range(-r, r + 1):
        spatial_row = math.exp(-(dy * dy) * inv2ss)
        for dx in range(-r, r + 1):
            spatial = spatial_row * math.exp(-(dx * dx) * inv2ss)
            shifted = padded[r + dy : r + dy + h, r + dx : r + dx + w]
            wgt = spatial * np.exp(-((a - shifted) ** 2) * inv2sr)
            acc += wgt * shifted
            wsum += wgt
    return ImagePlane(acc / wsum)
