"""Overexposure detection, component labeling and contour extraction.

Components are 4-connected; outlines are traced with the 8-neighbor Moore
algorithm.  With that pairing, ``rasterize_contours(trace_contours(m))``
reproduces ``m`` exactly whenever no component encloses background that is
cut off from the outside under 4-connectivity (i.e. the mask is hole-free
in the ``scipy.ndimage.binary_fill_holes`` sense).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .imagecore import as_plane

DEFAULT_THRESHOLD = 235.0 / 255.0
HIGHLIGHT = (1.0, 0.0, 0.0)

# Moore neighborhood as (dx, dy), clockwise on screen (y grows downward), from west
_DIRS = ((-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1))
_DIR_INDEX = {d: i for i, d in enumerate(_DIRS)}
_FOUR = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class Contour:
    points: tuple[tuple[int, int], ...]  # (x, y); closure implicit
    closed: bool = True

    def __len__(self):
        return len(self.points)

    def perimeter(self) -> float:
        """Euclidean length of the closed vertex chain."""
        if len(self.points) < 2:
            return 0.0
        pts = np.asarray(self.points, dtype=np.float64)
        seg = np.diff(np.vstack([pts, pts[:1]]), axis=0)
        return float(np.hypot(seg[:, 0], seg[:, 1]).sum())


def detect_overexposed(luma, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    return as_plane(luma, "luma") >= threshold


def connected_components(mask) -> tuple[np.ndarray, int]:
    """4-connected labels numbered in raster order of each component's first pixel."""
    mask = np.asarray(mask, dtype=bool)
    raw, n = ndimage.label(mask, structure=_FOUR)
    if n == 0:
        return raw.astype(np.int64), 0
    flat = raw.ravel()
    labs, first = np.unique(flat, return_index=True)
    keep = labs > 0
    order = labs[keep][np.argsort(first[keep])]
    remap = np.zeros(n + 1, dtype=np.int64)
    remap[order] = np.arange(1, n + 1)
    return remap[raw], int(n)


def _moore_trace(comp: np.ndarray) -> list[tuple[int, int]]:
    """Outer boundary of one 8-connected blob, clockwise from its top-left pixel.

    Jacob's stopping criterion is applied to the first move: tracing ends when
    the walk leaves the start pixel into the same neighbor, with the same
    backtrack, as it did initially.  (The synthetic west backtrack of the
    start pixel is not always revisited, e.g. when the start is entered from
    below, so it cannot serve as the reference state.)
    """
    h, w = comp.shape
    ys, xs = np.nonzero(comp)
    start = (int(xs[0]), int(ys[0]))
    p, back = start, (start[0] - 1, start[1])
    out = [start]
    first = None
    limit = 8 * int(comp.sum()) + 16
    for _ in range(limit):
        k = _DIR_INDEX[(back[0] - p[0], back[1] - p[1])]
        nxt = None
        for i in range(1, 9):
            dx, dy = _DIRS[(k + i) % 8]
            cx, cy = p[0] + dx, p[1] + dy
            if 0 <= cx < w and 0 <= cy < h and comp[cy, cx]:
                bx, by = _DIRS[(k + i - 1) % 8]
                nxt, back = (cx, cy), (p[0] + bx, p[1] + by)
                break
        if nxt is None:  # isolated pixel
            return out
        if first is None:
            first = (nxt, back)
        elif p == start and (nxt, back) == first:
            out.pop()  # the closing visit to start
            return out
        p = nxt
        out.append(p)
    raise RuntimeError("Moore tracing failed to terminate")


def trace_contours(mask) -> list[Contour]:
    """One clockwise outer contour per 4-connected component, in label order."""
    labels, n = connected_components(mask)
    contours = []
    for lab in range(1, n + 1):
        contours.append(Contour(tuple(_moore_trace(labels == lab))))
    return contours


def _check_bounds(contours, width, height):
    for c in contours:
        for x, y in c.points:
            if not (0 <= x < width and 0 <= y < height):
                raise ValueError(f"contour vertex ({x}, {y}) outside {width}x{height} frame")


def _fill_polygon(out: np.ndarray, pts: np.ndarray) -> None:
    """Set pixels whose centers lie inside the closed polygon (even-odd rule)."""
    x1, y1 = pts[:, 0], pts[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    for y in range(int(y1.min()), int(y1.max()) + 1):
        cross = (y1 > y) != (y2 > y)
        if not cross.any():
            continue
        xa, ya, xb, yb = x1[cross], y1[cross], x2[cross], y2[cross]
        xs = np.sort(xa + (y - ya) * (xb - xa) / (yb - ya))
        cols = np.arange(int(np.floor(xs[0])), int(np.ceil(xs[-1])) + 1)
        cols = cols[(cols >= 0) & (cols < out.shape[1])]
        # crossings strictly to the right of each pixel center
        right = len(xs) - np.searchsorted(xs, cols, side="right")
        out[y, cols[right % 2 == 1]] = True


def rasterize_contours(contours, width: int, height: int) -> np.ndarray:
    """Filled mask: contour pixels plus pixel centers enclosed by each polygon."""
    _check_bounds(contours, width, height)
    out = np.zeros((height, width), dtype=bool)
    for c in contours:
        pts = np.asarray(c.points, dtype=np.float64).reshape(-1, 2)
        if len(pts) == 0:
            continue
        if c.closed and len(pts) >= 3:
            _fill_polygon(out, pts)
        ix = pts.astype(np.int64)
        out[ix[:, 1], ix[:, 0]] = True
    return out


def overlay_contours(ir, contours, color=HIGHLIGHT) -> np.ndarray:
    """Gray infrared replicated to RGB with contour pixels painted ``color``."""
    plane = as_plane(ir, "infrared")
    h, w = plane.shape
    _check_bounds(contours, w, h)
    rgb = np.repeat(plane[..., None], 3, axis=2)
    for c in contours:
        for x, y in c.points:
            rgb[y, x] = color
    return rgb


def contours_to_json(contours) -> str:
    return json.dumps([[list(p) for p in c.points] for c in contours])


def contours_from_json(text: str) -> list[Contour]:
    doc = json.loads(text)
    return [Contour(tuple((int(x), int(y)) for x, y in pts)) for pts in doc]


def save_contours(path, contours) -> None:
    Path(path).write_text(contours_to_json(contours) + "\n")


def load_contours(path) -> list[Contour]:
    return contours_from_json(Path(path).read_text())
