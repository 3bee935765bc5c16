"""Exposure-aware loss terms and the overexposure failure-mode classifier.

The image is split by a binary overexposure mask into ``M_oe`` and its
complement ``M_normal``.  Normal regions pull the fused image toward the
element-wise max of the sources (intensity) and of their Sobel magnitudes
(texture).  Overexposed regions pull intensity toward a pseudo target and
texture toward ``gamma`` times the infrared gradients.

All l1 norms are divided by the pixel count unless ``reduction="sum"``.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass

import numpy as np

from .imagecore import as_plane, check_same_shape, sobel_magnitude


@dataclass(frozen=True)
class LossWeights:
    zeta: float = 1.0   # fusion loss weight
    phi: float = 1.0    # segmentation loss weight
    delta: float = 1.0  # intensity vs texture balance
    gamma: float = 2.0  # infrared gradient amplification inside M_oe
    tau: float = 0.05   # classifier threshold

    def __post_init__(self):
        for name in ("zeta", "phi", "delta", "gamma"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"weight {name} must be >= 0, got {getattr(self, name)}")
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")

    @classmethod
    def from_dict(cls, doc: dict) -> "LossWeights":
        extra = set(doc) - set(cls.__dataclass_fields__)
        if extra:
            raise ValueError(f"unknown loss weight keys: {sorted(extra)}")
        return cls(**{k: float(v) for k, v in doc.items()})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LossBreakdown:
    in_normal: float
    in_mask: float
    grad_normal: float
    grad_mask: float
    fusion: float
    seg: float
    diff: float
    total: float

    def to_dict(self) -> dict:
        return asdict(self)


class Dominance(str, enum.Enum):
    INTENSITY = "IntensityDominated"
    TEXTURE = "TextureDominated"
    NEITHER = "Neither"


def region_masks(mask) -> tuple[np.ndarray, np.ndarray]:
    """Float indicators ``(M_oe, M_normal)``; they sum to exactly 1 everywhere."""
    m_oe = np.asarray(mask, dtype=bool).astype(np.float64)
    return m_oe, 1.0 - m_oe


def _l1(x: np.ndarray, reduction: str) -> float:
    s = float(np.abs(x).sum())
    if reduction == "mean":
        return s / x.size
    if reduction == "sum":
        return s
    raise ValueError(f"reduction must be 'mean' or 'sum', got {reduction!r}")


def _masks(masks, shape):
    if isinstance(masks, tuple):
        m_oe, m_normal = (np.asarray(m, dtype=np.float64) for m in masks)
    else:
        m_oe, m_normal = region_masks(masks)
    if m_oe.shape != shape or m_normal.shape != shape:
        raise ValueError(f"mask shape {m_oe.shape} does not match image shape {shape}")
    return m_oe, m_normal


def intensity_loss(f, vi, ir, pseudo, masks, reduction: str = "mean") -> tuple[float, float]:
    """``(in_normal, in_mask)``.

    ``masks`` is a boolean overexposure mask or a precomputed
    ``(M_oe, M_normal)`` pair from :func:`region_masks`.
    """
    f, vi, ir, pseudo = (as_plane(x, n) for x, n in ((f, "f"), (vi, "vi"), (ir, "ir"), (pseudo, "pseudo")))
    check_same_shape(f, vi, ir, pseudo, names=("f", "vi", "ir", "pseudo"))
    m_oe, m_normal = _masks(masks, f.shape)
    in_normal = _l1(m_normal * (f - np.maximum(vi, ir)), reduction)
    in_mask = _l1(m_oe * (f - pseudo), reduction)
    return in_normal, in_mask


def gradient_loss(f, vi, ir, masks, gamma: float = 2.0, reduction: str = "mean") -> tuple[float, float]:
    """``(grad_normal, grad_mask)`` on normalized Sobel magnitudes."""
    if not gamma >= 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    f, vi, ir = as_plane(f, "f"), as_plane(vi, "vi"), as_plane(ir, "ir")
    check_same_shape(f, vi, ir, names=("f", "vi", "ir"))
    m_oe, m_normal = _masks(masks, f.shape)
    df, dvi, dir_ = sobel_magnitude(f), sobel_magnitude(vi), sobel_magnitude(ir)
    grad_normal = _l1(m_normal * (df - np.maximum(dvi, dir_)), reduction)
    grad_mask = _l1(m_oe * (df - gamma * dir_), reduction)
    return grad_normal, grad_mask


def _nonneg(**kw):
    for k, v in kw.items():
        if not v >= 0:
            raise ValueError(f"{k} must be >= 0, got {v}")


def fusion_loss(in_normal, in_mask, grad_normal, grad_mask, delta: float = 1.0) -> float:
    _nonneg(in_normal=in_normal, in_mask=in_mask, grad_normal=grad_normal,
            grad_mask=grad_mask, delta=delta)
    return delta * (in_normal + in_mask) + (grad_normal + grad_mask)


def total_loss(fusion, seg, diff, zeta: float = 1.0, phi: float = 1.0) -> float:
    _nonneg(fusion=fusion, seg=seg, diff=diff, zeta=zeta, phi=phi)
    return zeta * fusion + phi * seg + diff


def seg_cross_entropy(pred, target) -> float:
    """Mean per-pixel ``-ln p(target)``.

    ``pred`` has shape ``(C, H, W)`` with strictly positive probabilities
    summing to 1 (within 1e-6) per pixel; ``target`` holds class indices.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target)
    if pred.ndim != 3 or pred.shape[0] < 2:
        raise ValueError(f"pred must have shape (C>=2, H, W), got {pred.shape}")
    if target.shape != pred.shape[1:]:
        raise ValueError(f"target shape {target.shape} does not match pred {pred.shape[1:]}")
    if np.any(pred <= 0):
        raise ValueError("probabilities must be strictly positive")
    if np.max(np.abs(pred.sum(axis=0) - 1.0)) > 1e-6:
        raise ValueError("probabilities must sum to 1 per pixel")
    if not np.issubdtype(target.dtype, np.integer) or target.min() < 0 or target.max() >= pred.shape[0]:
        raise ValueError("target must hold integer class indices in [0, C)")
    picked = np.take_along_axis(pred, target[None].astype(np.int64), axis=0)[0]
    return float(-np.log(picked).mean())


def diffusion_loss(eps_true, eps_pred, reduction: str = "mean") -> float:
    """l1 distance between true and predicted noise (unclamped planes)."""
    a = np.asarray(eps_true, dtype=np.float64)
    b = np.asarray(eps_pred, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return _l1(a - b, reduction)


def pseudo_target(vi, ir) -> np.ndarray:
    return 0.5 * as_plane(vi, "vi") + 0.5 * as_plane(ir, "ir")


def compute_losses(f, vi, ir, mask, weights: LossWeights = LossWeights(), pseudo=None,
                   seg: float = 0.0, diff: float = 0.0, reduction: str = "mean") -> LossBreakdown:
    """Every term for one image; ``seg`` and ``diff`` come from outside (no network here)."""
    if pseudo is None:
        pseudo = pseudo_target(vi, ir)
    in_n, in_m = intensity_loss(f, vi, ir, pseudo, mask, reduction)
    gr_n, gr_m = gradient_loss(f, vi, ir, mask, weights.gamma, reduction)
    fus = fusion_loss(in_n, in_m, gr_n, gr_m, weights.delta)
    tot = total_loss(fus, seg, diff, weights.zeta, weights.phi)
    return LossBreakdown(in_n, in_m, gr_n, gr_m, fus, float(seg), float(diff), tot)


def dominance_stats(f, vi, ir, m_oe) -> tuple[float, float, float]:
    """Means over ``m_oe`` of ``|f-vi|``, ``|grad f - grad vi|`` and ``|f-ir|``."""
    f, vi, ir = as_plane(f, "f"), as_plane(vi, "vi"), as_plane(ir, "ir")
    check_same_shape(f, vi, ir, names=("f", "vi", "ir"))
    m = np.asarray(m_oe, dtype=bool)
    if m.shape != f.shape:
        raise ValueError(f"mask shape {m.shape} does not match image shape {f.shape}")
    if not m.any():
        raise ValueError("classification undefined for an empty overexposure mask")
    d_int = float(np.abs(f - vi)[m].mean())
    d_tex = float(np.abs(sobel_magnitude(f) - sobel_magnitude(vi))[m].mean())
    d_ir = float(np.abs(f - ir)[m].mean())
    return d_int, d_tex, d_ir


def dominance_classify(f, vi, ir, m_oe, tau: float = 0.05) -> Dominance:
    """Which failure mode, if any, the fused image shows inside ``m_oe``.

    IntensityDominated: fused intensity stays at the visible one.
    TextureDominated: fused gradients track the visible ones while intensity
    departs from the infrared.  Pixels more than one step outside ``m_oe``
    never influence the result.
    """
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    d_int, d_tex, d_ir = dominance_stats(f, vi, ir, m_oe)
    if d_int < tau:
        return Dominance.INTENSITY
    if d_tex < tau and d_ir >= tau:
        return Dominance.TEXTURE
    return Dominance.NEITHER
