"""Image, manifest and report persistence.

Supported image formats are 8-bit PNG (gray or RGB) and binary PGM/PPM.
Values are scaled by 1/255 on read and quantized with ``round(v * 255)``
on write, so write -> read -> write is byte-stable.

Manifest schema (JSON)::

    {"entries": [
        {"id": "pair01",
         "visible_path": "vi/pair01.png",
         "infrared_path": "ir/pair01.png",
         "mask_path": "mask/pair01.png",      # optional
         "label_path": "labels/pair01.png"}   # optional
    ]}

Relative paths resolve against the manifest's directory.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
from PIL import Image, UnidentifiedImageError

from .imagecore import as_plane, as_rgb

METRIC_COLUMNS = ("EN", "MI", "VIF", "Qabf", "SSIM")
LOSS_COLUMNS = ("in_normal", "in_mask", "grad_normal", "grad_mask", "fusion", "seg", "diff", "total")

_SUFFIXES = {".png", ".pgm", ".ppm", ".pnm"}


class ImageReadError(Exception):
    """Base class for decode failures; carries the offending path."""

    def __init__(self, path, msg):
        super().__init__(f"{path}: {msg}")
        self.path = str(path)


class UnsupportedFormatError(ImageReadError):
    pass


class CorruptImageError(ImageReadError):
    pass


class ManifestError(ValueError):
    pass


def read_image(path) -> np.ndarray:
    """Decode ``path`` to a float plane ``(H, W)`` or RGB image ``(H, W, 3)``.

    Raises FileNotFoundError, UnsupportedFormatError or CorruptImageError.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    if path.suffix.lower() not in _SUFFIXES:
        raise UnsupportedFormatError(path, f"unsupported extension {path.suffix!r}")
    try:
        with Image.open(path) as im:
            if im.format not in ("PNG", "PPM"):
                raise UnsupportedFormatError(path, f"unsupported format {im.format}")
            im.load()
            mode = im.mode
            if mode in ("1", "L"):
                data = np.asarray(im.convert("L"), dtype=np.uint8)
            elif mode in ("RGB", "RGBA", "P", "LA"):
                target = "L" if mode == "LA" else "RGB"
                data = np.asarray(im.convert(target), dtype=np.uint8)
            else:
                raise UnsupportedFormatError(path, f"unsupported pixel mode {mode} (8-bit only)")
    except UnsupportedFormatError:
        raise
    except UnidentifiedImageError as exc:
        raise CorruptImageError(path, f"cannot identify image data ({exc})") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        raise CorruptImageError(path, f"corrupt image stream ({exc})") from exc
    return data.astype(np.float64) / 255.0


def to_bytes(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    arr = as_plane(arr) if arr.ndim == 2 else as_rgb(arr)
    return np.round(arr * 255.0).astype(np.uint8)


def write_image(path, img) -> None:
    """Quantize and save a plane or RGB image; format follows the suffix."""
    path = Path(path)
    data = to_bytes(img)
    suffix = path.suffix.lower()
    if suffix not in _SUFFIXES:
        raise UnsupportedFormatError(path, f"unsupported extension {path.suffix!r}")
    fmt = "PNG" if suffix == ".png" else "PPM"
    try:
        Image.fromarray(data).save(path, format=fmt)
    except OSError as exc:
        raise OSError(f"failed to write {path}: {exc}") from exc


def write_mask(path, mask) -> None:
    """Binary masks persist as 0/255 gray PNG."""
    write_image(path, np.asarray(mask, dtype=bool).astype(np.float64))


def read_mask(path) -> np.ndarray:
    img = read_image(path)
    if img.ndim == 3:
        img = img.max(axis=2)
    return img >= 0.5


def read_labels(path) -> np.ndarray:
    """Integer label map stored as raw 8-bit gray levels (0 = background)."""
    img = read_image(path)
    if img.ndim == 3:
        img = img[..., 0]
    return np.round(img * 255.0).astype(np.int64)


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    visible_path: Path
    infrared_path: Path
    mask_path: Path | None = None
    label_path: Path | None = None


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry] = field(default_factory=list)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)


def parse_manifest(doc, base_dir=".") -> DatasetManifest:
    if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
        raise ManifestError("manifest must be an object with an 'entries' list")
    base = Path(base_dir)
    seen = set()
    entries = []
    for i, rec in enumerate(doc["entries"]):
        if not isinstance(rec, dict):
            raise ManifestError(f"entry {i} is not an object")
        for key in ("id", "visible_path", "infrared_path"):
            val = rec.get(key)
            if not isinstance(val, str) or not val:
                raise ManifestError(f"entry {i}: missing or empty required field {key!r}")
        if rec["id"] in seen:
            raise ManifestError(f"duplicate id {rec['id']!r}")
        seen.add(rec["id"])
        opt = {}
        for key in ("mask_path", "label_path"):
            val = rec.get(key)
            if val is None:
                continue
            if not isinstance(val, str) or not val:
                raise ManifestError(f"entry {rec['id']!r}: {key} must be a non-empty string")
            opt[key] = base / val
        entries.append(ManifestEntry(rec["id"], base / rec["visible_path"],
                                     base / rec["infrared_path"], **opt))
    return DatasetManifest(entries)


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: malformed manifest ({exc})") from exc
    return parse_manifest(doc, path.parent)


def dump_manifest(manifest: DatasetManifest, path) -> None:
    base = Path(path).parent
    out = []
    for e in manifest.entries:
        rec = {"id": e.id}
        for key in ("visible_path", "infrared_path", "mask_path", "label_path"):
            val = getattr(e, key)
            if val is not None:
                rec[key] = os.path.relpath(val, base)
        out.append(rec)
    Path(path).write_text(json.dumps({"entries": out}, indent=2) + "\n")


@dataclass
class ReportRow:
    id: str
    values: dict[str, float]


def report_columns(rows: Iterable[ReportRow]) -> list[str]:
    """Stable column order: metrics, then losses, then anything else sorted."""
    rows = list(rows)
    if not rows:
        return []
    cols = set(rows[0].values)
    for r in rows[1:]:
        if set(r.values) != cols:
            raise ValueError(f"row {r.id!r} has columns {sorted(r.values)}, expected {sorted(cols)}")
    known = [c for c in METRIC_COLUMNS + LOSS_COLUMNS if c in cols]
    return known + sorted(cols - set(known))


def write_report(path, rows, format: str = "csv") -> None:
    rows = list(rows)
    cols = report_columns(rows)
    fmt = format.lower()
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id"] + cols)
            for r in rows:
                w.writerow([r.id] + [repr(float(r.values[c])) for c in cols])
    elif fmt == "json":
        doc = [{"id": r.id, **{c: float(r.values[c]) for c in cols}} for r in rows]
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")
    else:
        raise ValueError(f"unknown report format {format!r} (csv or json)")
