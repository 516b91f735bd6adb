"""Two-step collaborative denoising over match tables.

Step one gathers each reference's matched patches into a 3D stack, shrinks it
in a separable transform domain (orthonormal 2D DCT per patch, orthonormal
Walsh-Hadamard along the stack) and aggregates the overlapping estimates with
per-group weights. Step two repeats the grouping on the first-step output and
applies empirical Wiener attenuation to the noisy stacks instead of hard
thresholding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dctn, idctn

from .imaging import ImagePlane
from .match_oracle import MatchParams, MatchTable, PatchStack, find_matches_block, gather_stack
from .match_stream import find_matches_stream


@dataclass(frozen=True)
class Bm3dParams:
    """Both matching profiles plus the filtering tunables."""

    hard: MatchParams
    wien: MatchParams
    sigma: float
    lambda3d: float = 2.7
    kaiser_beta: float = 2.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.lambda3d < 0:
            raise ValueError(f"lambda3d must be >= 0, got {self.lambda3d}")
        if self.kaiser_beta < 0:
            raise ValueError(f"kaiser_beta must be >= 0, got {self.kaiser_beta}")


@dataclass
class AggregationBuffers:
    """Weighted-estimate numerator and weight denominator, one cell per pixel."""

    nu: np.ndarray
    delta: np.ndarray

    @classmethod
    def zeros(cls, height: int, width: int) -> "AggregationBuffers":
        return cls(
            nu=np.zeros((height, width), dtype=np.float64),
            delta=np.zeros((height, width), dtype=np.float64),
        )


def kaiser_window(k: int, beta: float) -> np.ndarray:
    """Separable 2D Kaiser taper over a k x k patch footprint."""
    w = np.kaiser(k, beta)
    return np.outer(w, w)


def _fwht_axis0(a: np.ndarray) -> np.ndarray:
    """Orthonormal fast Walsh-Hadamard transform along axis 0 (self-inverse).

    Butterfly form: balanced +/- sums cancel exactly, so constant stacks
    produce exact zeros in every layer past the first.
    """
    d = a.shape[0]
    out = np.array(a, dtype=np.float64, copy=True)
    h = 1
    while h < d:
        for i in range(0, d, 2 * h):
            x = out[i : i + h].copy()
            y = out[i + h : i + 2 * h]
            out[i : i + h] = x + y
            out[i + h : i + 2 * h] = x - y
        h *= 2
    if d > 1:
        out /= np.sqrt(d)
    return out


def transform_3d_forward(stack: PatchStack) -> np.ndarray:
    """Separable isometric 3D transform: 2D DCT-II per patch, Hadamard in depth."""
    c = dctn(stack.patches, type=2, axes=(1, 2), norm="ortho")
    return _fwht_axis0(c)


def transform_3d_inverse(coeffs: np.ndarray) -> np.ndarray:
    """Invert transform_3d_forward (Hadamard is self-inverse, then inverse DCT)."""
    c = _fwht_axis0(np.asarray(coeffs, dtype=np.float64))
    return idctn(c, type=2, axes=(1, 2), norm="ortho")


def collaborative_hard(
    stack: PatchStack, lambda3d: float, sigma: float
) -> tuple[PatchStack, float]:
    """Hard-threshold the 3D spectrum; weight is the inverse retained-coefficient count."""
    coeffs = transform_3d_forward(stack)
    thr = lambda3d * sigma
    if thr > 0:
        coeffs = np.where(np.abs(coeffs) <= thr, 0.0, coeffs)
    n_kept = int(np.count_nonzero(coeffs))
    est = transform_3d_inverse(coeffs)
    w = 1.0 / n_kept if n_kept >= 1 else 1.0
    return PatchStack(est, list(stack.positions)), w


def wiener_gains(basic_coeffs: np.ndarray, sigma: float) -> np.ndarray:
    """Empirical Wiener attenuation per coefficient: b^2 / (b^2 + sigma^2).

    At sigma == 0 the gains are identically one (no attenuation).
    """
    if sigma == 0:
        return np.ones_like(np.asarray(basic_coeffs, dtype=np.float64))
    b2 = np.asarray(basic_coeffs, dtype=np.float64) ** 2
    return b2 / (b2 + sigma * sigma)


def collaborative_wiener(
    noisy_stack: PatchStack, basic_stack: PatchStack, sigma: float
) -> tuple[PatchStack, float]:
    """Attenuate the noisy spectrum by empirical Wiener coefficients from the basic stack.

    The group weight is 1 / ||omega||^2. A zero basic stack makes omega vanish
    identically; the weight then falls back to 1 and callers skip aggregating
    the group.
    """
    if noisy_stack.patches.shape != basic_stack.patches.shape:
        raise ValueError(
            f"stack shape mismatch: {noisy_stack.patches.shape} vs "
            f"{basic_stack.patches.shape}"
        )
    nc = transform_3d_forward(noisy_stack)
    omega = wiener_gains(transform_3d_forward(basic_stack), sigma)
    est = transform_3d_inverse(omega * nc)
    norm2 = float(np.sum(omega * omega))
    w = 1.0 / norm2 if norm2 > 0 else 1.0
    return PatchStack(est, list(noisy_stack.positions)), w


def aggregate(
    buffers: AggregationBuffers, filtered: PatchStack, w: float, kaiser: np.ndarray
) -> None:
    """Accumulate one filtered group into the estimate buffers.

    Every layer adds w * kaiser * estimate into nu and w * kaiser into delta
    over its own footprint.
    """
    k = filtered.k
    if kaiser.shape != (k, k):
        raise ValueError(f"kaiser window {kaiser.shape} does not match patch size {k}")
    h, wid = buffers.nu.shape
    wk = w * kaiser
    for layer, (r, c) in zip(filtered.patches, filtered.positions):
        if not (0 <= r <= h - k and 0 <= c <= wid - k):
            raise ValueError(f"patch position ({r}, {c}) out of frame")
        buffers.nu[r : r + k, c : c + k] += wk * layer
        buffers.delta[r : r + k, c : c + k] += wk


def finalize(buffers: AggregationBuffers, fallback: ImagePlane | None = None) -> ImagePlane:
    """Per-pixel nu/delta. Uncovered pixels are an error unless a fallback plane
    supplies their values (used when aggregation deliberately covers a sub-frame)."""
    covered = buffers.delta > 0
    if fallback is None:
        if not covered.all():
            n_bad = int(np.count_nonzero(~covered))
            raise ValueError(f"uncovered pixel(s): {n_bad} positions have zero weight")
        return ImagePlane(buffers.nu / buffers.delta)
    safe = np.where(covered, buffers.delta, 1.0)
    return ImagePlane(np.where(covered, buffers.nu / safe, fallback.pixels))


def _check_table(img: ImagePlane, table: MatchTable) -> None:
    if (table.width, table.height) != (img.width, img.height):
        raise ValueError(
            f"table built for {table.width}x{table.height}, image is "
            f"{img.width}x{img.height}"
        )


def hard_step(
    noisy: ImagePlane,
    table: MatchTable,
    params: Bm3dParams,
    *,
    uncovered: str = "error",
) -> ImagePlane:
    """First denoising pass: gather, collaborative hard-thresholding, aggregate."""
    _check_table(noisy, table)
    kai = kaiser_window(table.params.block_size, params.kaiser_beta)
    buffers = AggregationBuffers.zeros(noisy.height, noisy.width)
    for ref in table.references():
        stack = gather_stack(noisy, table, ref)
        filt, w = collaborative_hard(stack, params.lambda3d, params.sigma)
        aggregate(buffers, filt, w, kai)
    return finalize(buffers, fallback=noisy if uncovered == "copy_input" else None)


def wiener_step(
    noisy: ImagePlane,
    basic: ImagePlane,
    table: MatchTable,
    params: Bm3dParams,
    *,
    uncovered: str = "error",
) -> ImagePlane:
    """Second pass: group both planes by the basic-estimate matches, Wiener-filter
    the noisy stacks, aggregate."""
    _check_table(noisy, table)
    _check_table(basic, table)
    kai = kaiser_window(table.params.block_size, params.kaiser_beta)
    buffers = AggregationBuffers.zeros(noisy.height, noisy.width)
    for ref in table.references():
        basic_stack = gather_stack(basic, table, ref)
        if params.sigma > 0 and not np.any(basic_stack.patches):
            continue  # omega would vanish identically; the group carries no signal
        noisy_stack = gather_stack(noisy, table, ref)
        filt, w = collaborative_wiener(noisy_stack, basic_stack, params.sigma)
        aggregate(buffers, filt, w, kai)
    return finalize(buffers, fallback=noisy if uncovered == "copy_input" else None)


# ---------------------------------------------------------------------------
# Full pipeline with selectable matcher backend
# ---------------------------------------------------------------------------

MATCHERS = ("oracle", "stream")


def reflect_pad(img: ImagePlane, pad: int) -> ImagePlane:
    return ImagePlane(np.pad(img.pixels, pad, mode="reflect"))


def crop(img: ImagePlane, pad: int, height: int, width: int) -> ImagePlane:
    return ImagePlane(img.pixels[pad : pad + height, pad : pad + width])


def padded_size(width: int, height: int, hw: int) -> tuple[int, int]:
    """Frame size after reflect-padding by one half-window on every side."""
    return width + 2 * hw, height + 2 * hw


def match_padded(img: ImagePlane, params: MatchParams) -> MatchTable:
    """Stream-match a reflect-padded frame so the overlap region covers it fully.

    The returned table is in padded coordinates (header dims grow by the
    window size); consumers pad the same way before gathering.
    """
    return find_matches_stream(reflect_pad(img, params.half_window), params)


def run_pipeline(
    noisy: ImagePlane,
    params: Bm3dParams,
    matcher: str = "oracle",
    table1: MatchTable | None = None,
) -> tuple[ImagePlane, ImagePlane]:
    """Run both steps and return (basic estimate, final estimate).

    matcher "oracle" searches the full frame directly; "stream" runs the
    overlap-region engine on a reflect-padded frame and crops afterwards.
    A precomputed first-step table may be supplied in either frame geometry
    (plain, or padded by the hard-profile half-window).
    """
    if matcher not in MATCHERS:
        raise ValueError(f"unknown matcher {matcher!r}, expected one of {MATCHERS}")
    h, w = noisy.height, noisy.width

    if table1 is None:
        if matcher == "stream":
            hw1 = params.hard.half_window
            noisy_p = reflect_pad(noisy, hw1)
            t1 = find_matches_stream(noisy_p, params.hard)
            basic_p = hard_step(noisy_p, t1, params, uncovered="copy_input")
            u_basic = crop(basic_p, hw1, h, w)
        else:
            t1 = find_matches_block(noisy, params.hard)
            u_basic = hard_step(noisy, t1, params)
    else:
        if table1.params.block_size != params.hard.block_size:
            raise ValueError(
                f"table incompatible: block size {table1.params.block_size} vs "
                f"{params.hard.block_size}"
            )
        pad = table1.params.half_window
        if (table1.width, table1.height) == padded_size(w, h, pad):
            noisy_p = reflect_pad(noisy, pad)
            basic_p = hard_step(noisy_p, table1, params, uncovered="copy_input")
            u_basic = crop(basic_p, pad, h, w)
        elif (table1.width, table1.height) == (w, h):
            u_basic = hard_step(noisy, table1, params)
        else:
            raise ValueError(
                f"table incompatible: built for {table1.width}x{table1.height}, "
                f"image is {w}x{h} (padded would be {padded_size(w, h, pad)})"
            )

    hw2 = params.wien.half_window
    if matcher == "stream":
        basic_p2 = reflect_pad(u_basic, hw2)
        noisy_p2 = reflect_pad(noisy, hw2)
        t2 = find_matches_stream(basic_p2, params.wien)
        final_p = wiener_step(noisy_p2, basic_p2, t2, params, uncovered="copy_input")
        u_final = crop(final_p, hw2, h, w)
    else:
        t2 = find_matches_block(u_basic, params.wien)
        u_final = wiener_step(noisy, u_basic, t2, params)
    return u_basic, u_final


def denoise(noisy: ImagePlane, params: Bm3dParams, matcher: str = "oracle") -> ImagePlane:
    """Two-step denoise of a single plane; returns the final estimate."""
    _, u_final = run_pipeline(noisy, params, matcher)
    return u_final
