"""Shared test apparatus: random curve families, synthetic road images,
mask-to-spline recovery, and a loopback server context manager.
"""

from __future__ import annotations

import contextlib

import numpy as np
from scipy.spatial import cKDTree

from roadgen.geometry import Spline2D, fit_spline, uniform_clamped_knots
from roadgen.imaging import BinaryMask, Contour, GrayImage
from roadgen.protocol import SceneServer
from roadgen.tiles import EMPTY, RasterParams, TileGrid, rasterize

DEGREE = 3


def arclen_spline(raw: Spline2D, n_ctrl: int, iters: int = 25, dense: int = 400) -> Spline2D:
    """Repeated chord refits drive the parameterization to near arc length."""
    spl = raw
    tt = np.linspace(0.0, 1.0, dense)
    for _ in range(iters):
        spl = fit_spline(spl(tt), n_ctrl).spline
    return spl


def max_curvature(spl: Spline2D, samples: int = 800) -> float:
    tt = np.linspace(0.0, 1.0, samples)
    d1 = spl.derivative(1)(tt)
    d2 = spl.derivative(2)(tt)
    num = np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    den = (d1[:, 0] ** 2 + d1[:, 1] ** 2) ** 1.5
    return float((num / np.maximum(den, 1e-12)).max())


def wiggle_spline(
    rng: np.random.Generator,
    wiggle: float = 24.0,
    max_k: float = 0.04,
    n_ctrl: int = 10,
) -> Spline2D:
    """Random smooth open curve, rejection-sampled to a curvature bound.

    Lateral offsets are locally averaged so most proposals already respect
    the bound; the rejection step is what defines the family.
    """
    while True:
        n = 8
        lateral = rng.uniform(-wiggle, wiggle, n)
        ext = np.concatenate([lateral[:1], lateral, lateral[-1:]])
        lateral = np.convolve(ext, np.ones(3) / 3, mode="valid")
        x = 50.0 + lateral
        y = np.sort(np.linspace(0.0, 100.0, n) + rng.uniform(-4.0, 4.0, n))
        raw = Spline2D(np.column_stack([x, y]))
        spl = arclen_spline(raw, n_ctrl)
        if max_curvature(spl) <= max_k:
            return spl


def smooth_path(pts: np.ndarray, window: int = 7) -> np.ndarray:
    """Moving average along the path, endpoints repeated as padding."""
    pad = window // 2
    ext = np.vstack([np.repeat(pts[:1], pad, axis=0), pts, np.repeat(pts[-1:], pad, axis=0)])
    kernel = np.ones(window) / window
    return np.column_stack(
        [np.convolve(ext[:, k], kernel, mode="valid") for k in range(pts.shape[1])]
    )


def recover_centerline(contour_points: np.ndarray, n_ctrl: int = 12) -> Spline2D:
    """One side of an out-and-back trace around a thin path, smoothed and refit.

    Points are (x, y); the curve family runs along y, so the outbound half
    ends at the maximal y.
    """
    cut = int(np.argmax(contour_points[:, 1]))
    path = contour_points[: cut + 1].astype(float) + 0.5
    path = smooth_path(path, 7)
    return fit_spline(path[::2], n_ctrl).spline


def road_mask(grid: TileGrid) -> np.ndarray:
    return grid.cells != EMPTY


def thin_raster(spl: Spline2D, width: int = 128, height: int = 128) -> np.ndarray:
    return rasterize(spl, RasterParams(width, height, road_halfwidth=0.0)).bits


def road_image(
    rng: np.random.Generator,
    width: int = 96,
    height: int = 96,
    halfwidth: float = 4.0,
) -> GrayImage:
    """Bright band of the given halfwidth around a smooth curve on black."""
    margin = 10.0
    t = np.linspace(0.0, 1.0, 800)
    phase = rng.uniform(0.0, 2 * np.pi)
    amp = rng.uniform(0.15, 0.3) * height
    cx = margin + t * (width - 2 * margin)
    cy = height / 2 + amp * np.sin(2 * np.pi * t + phase) * np.sin(np.pi * t)
    tree = cKDTree(np.column_stack([cx, cy]))
    yy, xx = np.mgrid[0:height, 0:width]
    centers = np.column_stack([xx.ravel() + 0.5, yy.ravel() + 0.5])
    d, _ = tree.query(centers)
    pixels = np.where(d.reshape(height, width) <= halfwidth, 230, 10)
    return GrayImage(pixels.astype(np.uint8))


def random_tilegrid(rng: np.random.Generator, width: int = 64, height: int = 64,
                    n_road: int = 60) -> TileGrid:
    cells = np.full((height, width), EMPTY, dtype=np.int16)
    rows = rng.integers(0, height, n_road)
    cols = rng.integers(0, width, n_road)
    codes = rng.integers(0, 16, n_road)
    cells[rows, cols] = codes
    return TileGrid(cells)


@contextlib.contextmanager
def loopback_server(tmp_path, transport: str = "stream"):
    """Yield (server, "host:port") for a scene server dumping into tmp_path."""
    dump = tmp_path / f"dump_{transport}.json"
    server = SceneServer("127.0.0.1", 0, transport=transport, dump_path=dump)
    with server:
        host, port = server.address
        yield server, f"{host}:{port}", dump
