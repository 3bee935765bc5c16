"""The bundled two-pair mini dataset (96x96, procedurally generated).

The PNGs under ``expofuse/data/mini`` were produced by :func:`build` and are
shipped as-is; rebuilding reproduces them byte-for-byte.  Each pair has an
RGB visible frame, a gray infrared frame with textured warm objects, and an
object label map (values 1..n) for spot placement.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np
from scipy import ndimage

from .dataio import DatasetManifest, ManifestEntry, dump_manifest, write_image

SIZE = 96


def manifest_path() -> Path:
    return Path(str(resources.files("expofuse") / "data" / "mini" / "manifest.json"))


def _smooth_noise(rng, shape, sigma):
    n = ndimage.gaussian_filter(rng.standard_normal(shape), sigma, mode="wrap")
    return (n - n.min()) / (n.max() - n.min())


def _scene(rng, objects, night: bool):
    h = w = SIZE
    ys, xs = np.mgrid[0:h, 0:w]
    horizon = 40
    sky = np.where(ys < horizon, 1.0, 0.0)
    base = 0.25 if night else 0.55
    vi = np.zeros((h, w, 3))
    grad = 0.15 * (1 - ys / h)
    tex = 0.12 * _smooth_noise(rng, (h, w), 1.5)
    for c, tint in enumerate((1.0, 1.02, 1.08) if not night else (0.9, 0.95, 1.15)):
        vi[..., c] = base * tint + sky * grad + (1 - sky) * tex
    # lane markings
    vi[(ys > 70) & (ys < 73) & ((xs // 8) % 2 == 0)] += 0.25

    ir = 0.30 + 0.18 * _smooth_noise(rng, (h, w), 2.0) + 0.06 * ((xs // 3 + ys // 3) % 2)
    labels = np.zeros((h, w), dtype=np.int64)
    for lab, (kind, x0, y0, x1, y1, color) in enumerate(objects, start=1):
        region = (xs >= x0) & (xs <= x1) & (ys >= y0) & (ys <= y1)
        if kind == "person":
            cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
            region &= ((xs - cx) / ((x1 - x0) / 2 + 0.5)) ** 2 + ((ys - cy) / ((y1 - y0) / 2 + 0.5)) ** 2 <= 1
        labels[region] = lab
        shade = 0.85 + 0.15 * _smooth_noise(rng, (h, w), 1.0)
        vi[region] = np.asarray(color)[None, :] * shade[region][:, None]
        stripes = 0.5 + 0.5 * np.sin(2 * np.pi * (xs + 0.5 * ys) / 5.0)
        heat = 0.62 if kind == "person" else 0.55
        ir[region] = heat + 0.3 * stripes[region]
    return np.clip(vi, 0, 1), np.clip(ir, 0, 1), labels


PAIRS = {
    "street": (False, [("car", 12, 48, 44, 66, (0.55, 0.12, 0.10)),
                       ("person", 60, 36, 70, 66, (0.20, 0.25, 0.45)),
                       ("car", 74, 52, 92, 64, (0.30, 0.35, 0.38))]),
    "night": (True, [("car", 30, 46, 70, 68, (0.15, 0.18, 0.22)),
                     ("person", 10, 38, 20, 70, (0.35, 0.30, 0.25))]),
}


def build(out_dir, seed: int = 2024) -> Path:
    """Regenerate the mini dataset into ``out_dir``; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, (name, (night, objects)) in enumerate(PAIRS.items()):
        rng = np.random.default_rng([seed, i])
        vi, ir, labels = _scene(rng, objects, night)
        write_image(out / f"{name}_vi.png", vi)
        write_image(out / f"{name}_ir.png", ir)
        write_image(out / f"{name}_labels.png", labels / 255.0)
        entries.append(ManifestEntry(name, out / f"{name}_vi.png", out / f"{name}_ir.png",
                                     label_path=out / f"{name}_labels.png"))
    path = out / "manifest.json"
    dump_manifest(DatasetManifest(entries), path)
    return path


if __name__ == "__main__":
    print(build(Path(__file__).parent / "data" / "mini"))
