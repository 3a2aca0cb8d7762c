"""Tile-map synthesis: spline rasterization and 4-neighbor road coding.

A spline is uniformly scaled and centered onto a cell grid, stamped into a
binary road mask (every cell whose center lies within the road halfwidth of
the densely sampled curve, plus the cells the curve itself passes through),
and each road cell is then coded by which of its 4-neighbors are road:
N=1, E=2, S=4, W=8, so a straight horizontal run codes 10 and a crossing 15.
Out-of-bounds neighbors count as non-road, which yields end-caps at edges.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Spline2D
from .imaging import BinaryMask

__all__ = [
    "EMPTY",
    "TileGrid",
    "RasterParams",
    "DegenerateSpline",
    "NotRoadCell",
    "rasterize",
    "code_neighborhood",
    "synthesize",
    "tilegrid_to_json",
    "tilegrid_from_json",
]

EMPTY = -1

_MAX_SAMPLES = 1 << 22


class DegenerateSpline(ValueError):
    pass


class NotRoadCell(ValueError):
    pass


@dataclass(frozen=True)
class TileGrid:
    """Row-major grid of tile codes: EMPTY (-1) or a 4-bit neighbor code."""

    cells: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.cells)
        if c.ndim != 2 or c.size == 0:
            raise ValueError("cells must be a nonempty 2-d array")
        c = c.astype(np.int16)
        valid = (c == EMPTY) | ((c >= 0) & (c <= 15))
        if not valid.all():
            raise ValueError("tile codes must be EMPTY or in [0, 15]")
        object.__setattr__(self, "cells", c)

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]


@dataclass(frozen=True)
class RasterParams:
    grid_width: int = 64
    grid_height: int = 64
    road_halfwidth: float = 1.5
    samples: int = 256

    def __post_init__(self):
        if self.grid_width < 1 or self.grid_height < 1:
            raise ValueError("grid dimensions must be positive")
        if self.road_halfwidth < 0:
            raise ValueError("road_halfwidth must be >= 0")
        if self.samples < 2:
            raise ValueError("samples must be >= 2")


def _grid_transform(spline: Spline2D, width: int, height: int):
    """Uniform scale and offset taking the curve's bounding box to the grid,
    aspect preserved, centered on the central cell's center."""
    t = np.linspace(0.0, 1.0, 1024)
    pts = spline(t)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    extent = hi - lo
    if np.linalg.norm(np.diff(pts, axis=0), axis=1).sum() < 1e-9:
        raise DegenerateSpline("curve has zero length")

    scales = []
    if extent[0] > 0:
        scales.append((width - 1) / extent[0])
    if extent[1] > 0:
        scales.append((height - 1) / extent[1])
    s = min(scales)

    anchor = np.array([(width - 1) // 2 + 0.5, (height - 1) // 2 + 0.5])
    offset = anchor - s * (lo + hi) / 2.0
    return s, offset


def _dense_grid_samples(spline, s, offset, start_samples: int) -> np.ndarray:
    """Curve samples in grid coordinates, refined until consecutive points
    are less than half a cell apart (asserted, per the rasterize contract)."""
    n = max(int(start_samples), 2)
    while True:
        pts = spline(np.linspace(0.0, 1.0, n)) * s + offset
        spacing = np.linalg.norm(np.diff(pts, axis=0), axis=1).max()
        if spacing < 0.5:
            break
        if n >= _MAX_SAMPLES:
            raise DegenerateSpline("cannot reach sub-cell sampling density")
        n = min(2 * n, _MAX_SAMPLES)
    assert np.linalg.norm(np.diff(pts, axis=0), axis=1).max() < 0.5
    return pts


def rasterize(spline: Spline2D, params: RasterParams) -> BinaryMask:
    """Binary road mask of the scaled curve.

    Marks the cells the sampled curve passes through (bridging diagonal
    steps so a zero-width road is 4-connected) plus every cell whose center
    lies within road_halfwidth of the sampled curve.
    """
    w, h = params.grid_width, params.grid_height
    s, offset = _grid_transform(spline, w, h)
    pts = _dense_grid_samples(spline, s, offset, params.samples)

    bits = np.zeros((h, w), dtype=bool)
    ix = np.clip(np.floor(pts[:, 0]).astype(int), 0, w - 1)
    iy = np.clip(np.floor(pts[:, 1]).astype(int), 0, h - 1)
    bits[iy, ix] = True

    # a diagonal cell step between consecutive samples breaks 4-connectivity;
    # mark whichever edge-adjacent cell sits closer to the segment midpoint
    step = (np.diff(ix) != 0) & (np.diff(iy) != 0)
    for k in np.nonzero(step)[0]:
        mid = (pts[k] + pts[k + 1]) / 2.0
        cand_a = (iy[k], ix[k + 1])
        cand_b = (iy[k + 1], ix[k])
        da = np.hypot(cand_a[1] + 0.5 - mid[0], cand_a[0] + 0.5 - mid[1])
        db = np.hypot(cand_b[1] + 0.5 - mid[0], cand_b[0] + 0.5 - mid[1])
        bits[cand_a if da <= db else cand_b] = True

    if params.road_halfwidth > 0:
        tree = cKDTree(pts)
        cx, cy = np.meshgrid(np.arange(w) + 0.5, np.arange(h) + 0.5)
        centers = np.column_stack([cx.ravel(), cy.ravel()])
        dist, _ = tree.query(centers, distance_upper_bound=params.road_halfwidth + 1e-9)
        bits |= (dist <= params.road_halfwidth).reshape(h, w)

    return BinaryMask(bits)


def code_neighborhood(mask: BinaryMask, x: int, y: int) -> int:
    """4-bit neighbor code of a road cell: N=1, E=2, S=4, W=8."""
    bits = mask.bits
    h, w = bits.shape
    if not (0 <= x < w and 0 <= y < h):
        raise IndexError(f"cell ({x}, {y}) outside {w}x{h} grid")
    if not bits[y, x]:
        raise NotRoadCell(f"cell ({x}, {y}) is not road")
    code = 0
    if y > 0 and bits[y - 1, x]:
        code |= 1
    if x < w - 1 and bits[y, x + 1]:
        code |= 2
    if y < h - 1 and bits[y + 1, x]:
        code |= 4
    if x > 0 and bits[y, x - 1]:
        code |= 8
    return code


def synthesize(mask: BinaryMask) -> TileGrid:
    """Tile grid of the mask: EMPTY off-road, neighbor codes on road."""
    bits = mask.bits
    h, w = bits.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = bits
    code = (padded[:-2, 1:-1].astype(np.int16)       # N
            | padded[1:-1, 2:].astype(np.int16) << 1  # E
            | padded[2:, 1:-1].astype(np.int16) << 2  # S
            | padded[1:-1, :-2].astype(np.int16) << 3)  # W
    cells = np.where(bits, code, np.int16(EMPTY))
    return TileGrid(cells)


def tilegrid_to_json(grid: TileGrid) -> str:
    obj = {"width": grid.width, "height": grid.height,
           "cells": grid.cells.ravel().tolist()}
    return json.dumps(obj)


def tilegrid_from_json(text: str) -> TileGrid:
    obj = json.loads(text)
    for key in ("width", "height", "cells"):
        if key not in obj:
            raise ValueError(f"tile grid JSON missing {key!r}")
    w, h = int(obj["width"]), int(obj["height"])
    cells = np.asarray(obj["cells"], dtype=np.int16)
    if cells.size != w * h:
        raise ValueError("cells length does not match width * height")
    return TileGrid(cells.reshape(h, w))
