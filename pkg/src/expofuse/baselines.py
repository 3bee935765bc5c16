"""Reference fusion operators on luminance planes, plus color reassembly."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .imagecore import YCbCr, as_plane, as_rgb, check_same_shape, rgb_to_ycbcr, ycbcr_to_rgb

DEFAULT_FEATHER = 2.0
METHODS = ("pseudo", "max", "exposure-aware")


def _pair(vi, ir):
    vi, ir = as_plane(vi, "vi"), as_plane(ir, "ir")
    check_same_shape(vi, ir, names=("vi", "ir"))
    return vi, ir


def pseudo_fuse(vi, ir) -> np.ndarray:
    vi, ir = _pair(vi, ir)
    return 0.5 * vi + 0.5 * ir


def max_fuse(vi, ir) -> np.ndarray:
    vi, ir = _pair(vi, ir)
    return np.maximum(vi, ir)


def feather_weights(mask, feather: float) -> np.ndarray:
    """Soft blend weights: the mask blurred by a Gaussian of std ``feather``.

    Pixels inside the hard mask always keep weight 1, so the infrared is
    copied verbatim there and softening only spreads outward.
    """
    if not feather >= 0:
        raise ValueError(f"feather must be >= 0, got {feather}")
    m = np.asarray(mask, dtype=bool)
    w = m.astype(np.float64)
    if feather > 0:
        w = np.maximum(w, ndimage.gaussian_filter(w, feather, mode="nearest"))
    return np.clip(w, 0.0, 1.0)


def exposure_aware_fuse(vi, ir, mask, feather: float = DEFAULT_FEATHER) -> np.ndarray:
    """Infrared inside the overexposure mask, max fusion elsewhere, feathered seam."""
    vi, ir = _pair(vi, ir)
    m = np.asarray(mask, dtype=bool)
    check_same_shape(vi, m, names=("vi", "mask"))
    w = feather_weights(m, feather)
    out = w * ir + (1.0 - w) * np.maximum(vi, ir)
    out[m] = ir[m]
    return out


def fuse(vi, ir, method: str = "max", mask=None, feather: float = DEFAULT_FEATHER) -> np.ndarray:
    if method == "pseudo":
        return pseudo_fuse(vi, ir)
    if method == "max":
        return max_fuse(vi, ir)
    if method == "exposure-aware":
        if mask is None:
            raise ValueError("exposure-aware fusion needs an overexposure mask")
        return exposure_aware_fuse(vi, ir, mask, feather)
    raise ValueError(f"unknown fusion method {method!r}; choose from {METHODS}")


def assemble_color(fused_y, source) -> np.ndarray:
    """Swap the luma of ``source`` for ``fused_y`` and convert back to RGB."""
    rgb = as_rgb(source, "source")
    y = as_plane(fused_y, "fused_y")
    check_same_shape(y, rgb, names=("fused_y", "source"))
    ycc = rgb_to_ycbcr(rgb)
    return ycbcr_to_rgb(YCbCr(y, ycc.cb, ycc.cr))
