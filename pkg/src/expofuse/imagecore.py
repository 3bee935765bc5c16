"""Raster primitives shared by every other module.

Planes are plain 2-D ``float64`` numpy arrays (rows = y, columns = x) with
values in [0, 1]; RGB images are ``(H, W, 3)`` arrays.  Public operations
clamp what they return, so chaining them never leaves the unit interval.
The only exception is the unclamped feature planes used by the sampling
schedule, which live in :mod:`expofuse.schedule`.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# full-range BT.601
KR, KG, KB = 0.299, 0.587, 0.114
CB_SCALE = 2.0 * (1.0 - KB)  # 1.772
CR_SCALE = 2.0 * (1.0 - KR)  # 1.402

# largest Sobel magnitude reachable on [0, 1] input: |Gx| = |Gy| = 4
SOBEL_NORM = 4.0 * math.sqrt(2.0)

SOBEL_X = np.array([[-1.0, 0.0, 1.0],
                    [-2.0, 0.0, 2.0],
                    [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T.copy()


class YCbCr(NamedTuple):
    """Luma plus offset-binary chroma (0.5 is neutral)."""

    y: np.ndarray
    cb: np.ndarray
    cr: np.ndarray


def as_plane(p, name: str = "plane") -> np.ndarray:
    """Validate ``p`` as a non-empty 2-D plane and return a clamped float64 copy."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return np.clip(arr, 0.0, 1.0)


def as_rgb(img, name: str = "image") -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return np.clip(arr, 0.0, 1.0)


def check_same_shape(*arrays, names=None) -> None:
    shapes = [np.shape(a)[:2] for a in arrays]
    if any(s != shapes[0] for s in shapes[1:]):
        label = ", ".join(names) if names else "inputs"
        raise ValueError(f"dimension mismatch between {label}: {shapes}")


def rgb_to_ycbcr(img) -> YCbCr:
    rgb = as_rgb(img)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = KR * r + KG * g + KB * b
    cb = 0.5 + (b - y) / CB_SCALE
    cr = 0.5 + (r - y) / CR_SCALE
    return YCbCr(np.clip(y, 0.0, 1.0), np.clip(cb, 0.0, 1.0), np.clip(cr, 0.0, 1.0))


def ycbcr_to_rgb(ycc: YCbCr) -> np.ndarray:
    y = as_plane(ycc.y, "y")
    cb = as_plane(ycc.cb, "cb")
    cr = as_plane(ycc.cr, "cr")
    check_same_shape(y, cb, cr, names=("y", "cb", "cr"))
    r = y + CR_SCALE * (cr - 0.5)
    b = y + CB_SCALE * (cb - 0.5)
    g = (y - KR * r - KB * b) / KG
    return np.clip(np.stack([r, g, b], axis=-1), 0.0, 1.0)


def luma(img) -> np.ndarray:
    """Y channel of an RGB image, or the plane itself for single-channel input."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        return as_plane(arr)
    return rgb_to_ycbcr(arr).y


def sobel_components(p) -> tuple[np.ndarray, np.ndarray]:
    """Raw (unnormalized) horizontal and vertical Sobel responses.

    Borders use replicate padding, so a constant plane gives exactly zero.
    """
    arr = np.asarray(p, dtype=np.float64)
    padded = np.pad(arr, 1, mode="edge")
    win = sliding_window_view(padded, (3, 3))
    gx = np.einsum("ijkl,kl->ij", win, SOBEL_X)
    gy = np.einsum("ijkl,kl->ij", win, SOBEL_Y)
    return gx, gy


def sobel_magnitude(p) -> np.ndarray:
    """Gradient magnitude ``sqrt(gx**2 + gy**2) / (4*sqrt(2))``, in [0, 1]."""
    gx, gy = sobel_components(as_plane(p))
    return np.clip(np.hypot(gx, gy) / SOBEL_NORM, 0.0, 1.0)


def gaussian_weight(dx, dy, sigma: float):
    """Unnormalized Gaussian, peak 1 at the origin. Works on scalars or arrays."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    dx = np.asarray(dx, dtype=np.float64)
    dy = np.asarray(dy, dtype=np.float64)
    out = np.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))
    return float(out) if out.ndim == 0 else out


def gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    """Normalized ``size x size`` Gaussian window (MATLAB ``fspecial`` layout)."""
    if size < 1:
        raise ValueError("kernel size must be >= 1")
    half = (size - 1) / 2.0
    ax = np.arange(size, dtype=np.float64) - half
    k = gaussian_weight(ax[None, :], ax[:, None], sigma)
    return k / k.sum()


def filter_valid(p: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """2-D correlation keeping only positions where the kernel fits entirely."""
    kh, kw = kernel.shape
    if p.shape[0] < kh or p.shape[1] < kw:
        raise ValueError(f"plane {p.shape} smaller than kernel {kernel.shape}")
    win = sliding_window_view(p, (kh, kw))
    return np.einsum("ijkl,kl->ij", win, kernel)


def downsample(p, factor: int) -> np.ndarray:
    """Block-average pooling; ragged edge blocks average only their valid pixels."""
    if int(factor) != factor or factor < 1:
        raise ValueError(f"factor must be a positive integer, got {factor}")
    factor = int(factor)
    arr = as_plane(p)
    if factor == 1:
        return arr
    h, w = arr.shape
    oh, ow = -(-h // factor), -(-w // factor)
    padded = np.zeros((oh * factor, ow * factor))
    counts = np.zeros_like(padded)
    padded[:h, :w] = arr
    counts[:h, :w] = 1.0
    sums = padded.reshape(oh, factor, ow, factor).sum(axis=(1, 3))
    n = counts.reshape(oh, factor, ow, factor).sum(axis=(1, 3))
    return np.clip(sums / n, 0.0, 1.0)


def quantize(p, bins: int) -> np.ndarray:
    """Map [0, 1] onto integer levels ``0..bins-1``; 1.0 lands in the top level."""
    arr = as_plane(p)
    return np.minimum((arr * bins).astype(np.int64), bins - 1)


def histogram(p, bins: int = 256) -> np.ndarray:
    """Counts per uniform level of [0, 1]; sums to the pixel count."""
    if int(bins) != bins or bins < 2:
        raise ValueError(f"bins must be an integer >= 2, got {bins}")
    bins = int(bins)
    return np.bincount(quantize(p, bins).ravel(), minlength=bins)
