"""Synthetic overexposure: Gaussian light spots composited onto visible frames.

Each spot adds ``gain * tone * G(dx, dy, sigma)`` to every channel and
clamps, where ``G`` is the unnormalized Gaussian (peak 1).  With gain >= 1
the red channel always saturates at the spot center.

Randomness comes from numpy's PCG64 generator.  Per-image streams are
derived with ``SeedSequence([seed, crc32(image_id)])`` so a dataset is
reproducible byte-for-byte regardless of processing order.
"""

from __future__ import annotations

import enum
import json
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .imagecore import as_plane, as_rgb, check_same_shape, gaussian_weight

GAIN_MIN, GAIN_MAX = 1.0, 1.6


class Tone(str, enum.Enum):
    WHITE = "white"
    YELLOWISH = "yellowish"


TONE_RGB = {
    Tone.WHITE: (1.0, 1.0, 1.0),
    Tone.YELLOWISH: (1.0, 0.90, 0.65),
}


@dataclass(frozen=True)
class ExposureSpec:
    center: tuple[int, int]  # (x, y) in pixels
    sigma: float
    gain: float
    tone: Tone = Tone.WHITE

    def validate(self, width: int, height: int) -> None:
        x, y = self.center
        if not (0 <= x < width and 0 <= y < height):
            raise ValueError(f"spot center {self.center} outside {width}x{height} image")
        if not self.sigma > 0:
            raise ValueError(f"spot sigma must be positive, got {self.sigma}")
        if not GAIN_MIN <= self.gain <= GAIN_MAX:
            raise ValueError(f"spot gain {self.gain} outside [{GAIN_MIN}, {GAIN_MAX}]")
        Tone(self.tone)

    def to_dict(self) -> dict:
        return {"center": list(self.center), "sigma": self.sigma,
                "gain": self.gain, "tone": Tone(self.tone).value}


@dataclass
class SynthesisConfig:
    spots_per_image: tuple[int, int] = (1, 3)
    sigma_range: tuple[float, float] = (6.0, 16.0)
    gain_range: tuple[float, float] = (GAIN_MIN, GAIN_MAX)
    tone_probs: dict[str, float] = field(default_factory=lambda: {"white": 0.5, "yellowish": 0.5})
    jitter: float = 0.25  # fraction of the bounding-box extent
    seed: int = 0

    def __post_init__(self):
        self.spots_per_image = tuple(int(v) for v in self.spots_per_image)
        self.sigma_range = tuple(float(v) for v in self.sigma_range)
        self.gain_range = tuple(float(v) for v in self.gain_range)
        self.tone_probs = {Tone(k).value: float(v) for k, v in self.tone_probs.items()}
        self.validate()

    def validate(self) -> None:
        lo, hi = self.spots_per_image
        if not 0 <= lo <= hi or hi < 1:
            raise ValueError(f"spots_per_image must satisfy 0 <= lo <= hi, hi >= 1: {self.spots_per_image}")
        lo, hi = self.sigma_range
        if not 0 < lo <= hi:
            raise ValueError(f"sigma_range must satisfy 0 < lo <= hi: {self.sigma_range}")
        lo, hi = self.gain_range
        if not GAIN_MIN <= lo <= hi <= GAIN_MAX:
            raise ValueError(f"gain_range must lie inside [{GAIN_MIN}, {GAIN_MAX}]: {self.gain_range}")
        probs = list(self.tone_probs.values())
        if not probs or any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError(f"tone probabilities must be non-negative and sum to 1: {self.tone_probs}")
        if not 0 <= self.jitter <= 0.5:
            raise ValueError(f"jitter must lie in [0, 0.5], got {self.jitter}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthesisConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(doc) - known
        if extra:
            raise ValueError(f"unknown synthesis config keys: {sorted(extra)}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "SynthesisConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("spots_per_image", "sigma_range", "gain_range"):
            d[k] = list(d[k])
        return d


def image_rng(seed: int, image_id: str) -> np.random.Generator:
    """Independent generator for one image, mixed from the run seed and the id."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(image_id.encode("utf-8"))])
    return np.random.Generator(np.random.PCG64(ss))


def spot_field(shape, spec: ExposureSpec) -> np.ndarray:
    h, w = shape
    x0, y0 = spec.center
    ys, xs = np.mgrid[0:h, 0:w]
    return gaussian_weight(xs - x0, ys - y0, spec.sigma)


def apply_light_spot(img, spec: ExposureSpec) -> np.ndarray:
    rgb = as_rgb(img)
    h, w = rgb.shape[:2]
    spec.validate(w, h)
    g = spot_field((h, w), spec)
    tone = np.asarray(TONE_RGB[Tone(spec.tone)])
    return np.clip(rgb + spec.gain * g[..., None] * tone, 0.0, 1.0)


def _objects(labels: np.ndarray):
    """Yield (ys, xs) pixel coordinates of each positive label, in label order."""
    for lab in np.unique(labels):
        if lab <= 0:
            continue
        ys, xs = np.nonzero(labels == lab)
        yield ys, xs


def _draw_spot(rng, center, cfg: SynthesisConfig) -> ExposureSpec:
    sigma = rng.uniform(*cfg.sigma_range) if cfg.sigma_range[0] < cfg.sigma_range[1] else cfg.sigma_range[0]
    gain = rng.uniform(*cfg.gain_range) if cfg.gain_range[0] < cfg.gain_range[1] else cfg.gain_range[0]
    names = sorted(cfg.tone_probs)
    tone = names[rng.choice(len(names), p=[cfg.tone_probs[n] for n in names])]
    return ExposureSpec(center, float(sigma), float(gain), Tone(tone))


def sample_specs(labels, cfg: SynthesisConfig, rng: np.random.Generator) -> list[ExposureSpec]:
    """Draw spots for one image.

    ``labels`` is an integer object map (0 = background).  A random subset of
    objects, sized from ``cfg.spots_per_image``, each receives one spot
    anchored at its centroid, jittered and clipped to its bounding box.  An
    image without objects receives a single spot at a uniform location.
    """
    labels = np.asarray(labels)
    h, w = labels.shape
    objs = list(_objects(labels))
    if not objs:
        center = (int(rng.integers(0, w)), int(rng.integers(0, h)))
        return [_draw_spot(rng, center, cfg)]

    lo, hi = cfg.spots_per_image
    k = int(rng.integers(lo, hi + 1))
    k = min(max(k, 1), len(objs))
    picks = np.sort(rng.choice(len(objs), size=k, replace=False))
    specs = []
    for i in picks:
        ys, xs = objs[i]
        x0, x1, y0, y1 = xs.min(), xs.max(), ys.min(), ys.max()
        jx, jy = rng.uniform(-cfg.jitter, cfg.jitter, size=2)
        cx = xs.mean() + jx * (x1 - x0 + 1)
        cy = ys.mean() + jy * (y1 - y0 + 1)
        center = (int(np.clip(round(cx), x0, x1)), int(np.clip(round(cy), y0, y1)))
        specs.append(_draw_spot(rng, center, cfg))
    return specs


def synthesize_pair(vi, ir, specs) -> tuple[np.ndarray, np.ndarray]:
    """Apply ``specs`` to the visible image; infrared is returned untouched."""
    rgb = as_rgb(vi, "visible")
    ir_arr = np.asarray(ir)
    check_same_shape(rgb, ir_arr, names=("visible", "infrared"))
    as_plane(ir_arr, "infrared")
    for spec in specs:
        rgb = apply_light_spot(rgb, spec)
    return rgb, ir_arr
