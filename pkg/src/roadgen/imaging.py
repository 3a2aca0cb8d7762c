"""Grayscale preprocessing and contour extraction for road images.

The preprocessing chain applies, in a fixed order: contrast about mid-gray,
brightness offset, unsharp-mask sharpening, and Gaussian blur, clamping to
[0, 255] after each stage. Thresholding produces a road mask (white = road),
and Moore-neighbor boundary tracing turns each 8-connected foreground
component into an ordered pixel contour ready for spline fitting.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .geometry import Spline2D, TooFewPoints, fit_spline

__all__ = [
    "GrayImage",
    "BinaryMask",
    "Contour",
    "PreprocessParams",
    "EmptyMask",
    "preprocess",
    "threshold",
    "trace_contour",
    "contour_to_spline",
    "load_pgm",
    "save_pgm",
    "load_image",
    "save_mask_ppm",
]


class EmptyMask(ValueError):
    pass


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale image; pixels are a row-major (height, width) array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.size == 0:
            raise ValueError("pixels must be a nonempty 2-d array")
        if px.dtype != np.uint8:
            if np.any(px < 0) or np.any(px > 255):
                raise ValueError("pixel intensities must lie in [0, 255]")
            px = px.astype(np.uint8)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class BinaryMask:
    """Boolean road mask; bits are a row-major (height, width) array."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2 or b.size == 0:
            raise ValueError("bits must be a nonempty 2-d array")
        object.__setattr__(self, "bits", b.astype(bool))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True)
class Contour:
    """Ordered boundary pixels as (x, y) = (column, row) coordinates."""

    points: np.ndarray
    closed: bool

    def __post_init__(self):
        pts = np.asarray(self.points)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
            raise ValueError("points must be a nonempty (m, 2) array")
        if self.closed and len(pts) < 3:
            raise ValueError("closed contour needs at least 3 points")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class PreprocessParams:
    brightness_offset: float = 0.0
    contrast_gain: float = 1.0
    sharpness_amount: float = 0.0
    blur_sigma: float = 0.0
    threshold: int = 128

    def __post_init__(self):
        if self.contrast_gain <= 0:
            raise ValueError("contrast_gain must be > 0")
        if self.sharpness_amount < 0:
            raise ValueError("sharpness_amount must be >= 0")
        if self.blur_sigma < 0:
            raise ValueError("blur_sigma must be >= 0")
        if not (0 <= self.threshold <= 255):
            raise ValueError("threshold must lie in [0, 255]")


def _blur(arr: np.ndarray, sigma: float) -> np.ndarray:
    # kernel truncated at 3 sigma, borders reflected about the edge pixel
    return ndimage.gaussian_filter(arr, sigma=sigma, mode="reflect", truncate=3.0)


def preprocess(img: GrayImage, params: PreprocessParams) -> GrayImage:
    """Contrast, brightness, unsharp sharpening, then Gaussian blur.

    Each stage clamps to [0, 255]; identity parameters reproduce the input
    bit-exactly.
    """
    arr = img.pixels.astype(np.float64)
    if params.contrast_gain != 1.0:
        arr = np.clip(128.0 + params.contrast_gain * (arr - 128.0), 0.0, 255.0)
    if params.brightness_offset != 0.0:
        arr = np.clip(arr + params.brightness_offset, 0.0, 255.0)
    if params.sharpness_amount != 0.0:
        arr = np.clip(arr + params.sharpness_amount * (arr - _blur(arr, 1.0)), 0.0, 255.0)
    if params.blur_sigma > 0.0:
        arr = np.clip(_blur(arr, params.blur_sigma), 0.0, 255.0)
    return GrayImage(np.rint(arr).astype(np.uint8))


def threshold(img: GrayImage, level: int) -> BinaryMask:
    """Road mask: a pixel is road iff its intensity is >= level."""
    if not (0 <= level <= 255):
        raise ValueError("level must lie in [0, 255]")
    return BinaryMask(img.pixels >= level)


# Moore neighborhood in (row, col) deltas, clockwise starting west
_MOORE = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1))


def _trace_component(comp: np.ndarray, start: tuple[int, int]) -> list[tuple[int, int]]:
    """Moore-neighbor boundary trace of one component, clockwise from the
    topmost-leftmost pixel. Stops when a (pixel, backtrack) state repeats,
    which subsumes Jacob's criterion and also terminates on open, one-pixel
    wide paths where the classic criterion never re-fires.
    """
    h, w = comp.shape

    def fg(r: int, c: int) -> bool:
        return 0 <= r < h and 0 <= c < w and comp[r, c]

    contour = [start]
    pixel = start
    back = (start[0], start[1] - 1)
    seen = {(pixel, back)}
    guard = 8 * int(comp.sum()) + 8
    for _ in range(guard):
        base = _MOORE.index((back[0] - pixel[0], back[1] - pixel[1]))
        nxt = None
        prev = back
        for step in range(1, 9):
            dr, dc = _MOORE[(base + step) % 8]
            cand = (pixel[0] + dr, pixel[1] + dc)
            if fg(*cand):
                nxt = cand
                break
            prev = cand
        if nxt is None:
            break  # isolated pixel
        state = (nxt, prev)
        if state in seen:
            break
        seen.add(state)
        pixel, back = nxt, prev
        contour.append(pixel)
    if len(contour) > 1 and contour[-1] == start:
        contour.pop()
    return contour


def trace_contour(mask: BinaryMask) -> list[Contour]:
    """Boundary contours of every 8-connected foreground component,
    ordered by descending component pixel count.
    """
    bits = mask.bits
    if not bits.any():
        raise EmptyMask("mask has no foreground pixel")
    labels, count = ndimage.label(bits, structure=np.ones((3, 3), dtype=int))
    sizes = ndimage.sum_labels(bits, labels, index=np.arange(1, count + 1))
    order = np.argsort(-sizes, kind="stable") + 1

    contours = []
    for lab in order:
        comp = labels == lab
        start = tuple(np.argwhere(comp)[0])
        ring = _trace_component(comp, start)
        pts = np.array([(c, r) for r, c in ring], dtype=int)
        closed = len(pts) >= 3 and np.abs(pts[0] - pts[-1]).max() <= 1
        contours.append(Contour(points=pts, closed=closed))
    return contours


def contour_to_spline(contour: Contour, n_ctrl: int, stride: int) -> Spline2D:
    """Subsample every stride-th contour point and fit a cubic spline."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    pts = contour.points[::stride].astype(float)
    if len(pts) < n_ctrl:
        raise TooFewPoints(
            f"contour yields {len(pts)} points at stride {stride}, need {n_ctrl}")
    return fit_spline(pts, n_ctrl).spline


# ---------------------------------------------------------------------------
# image file I/O

def load_pgm(path) -> GrayImage:
    """Read a binary (P5) PGM file with maxval <= 255."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise ValueError("not a binary PGM (P5) file")

    # header: magic, width, height, maxval; '#' comments allowed between tokens
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    width, height, maxval = (int(t) for t in tokens)
    if maxval > 255:
        raise ValueError("only 8-bit PGM supported")
    raster = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    if raster.size != width * height:
        raise ValueError("truncated PGM raster")
    return GrayImage(raster.reshape(height, width).copy())


def save_pgm(img: GrayImage, path) -> None:
    header = f"P5\n{img.width} {img.height}\n255\n".encode()
    Path(path).write_bytes(header + img.pixels.tobytes())


def load_image(path) -> GrayImage:
    """Load a grayscale image; PGM natively, PNG via Pillow when available."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        return load_pgm(path)
    if suffix == ".png":
        try:
            from PIL import Image
        except ImportError as exc:
            raise ValueError("PNG support requires Pillow (pip install Pillow)") from exc
        with Image.open(path) as im:
            return GrayImage(np.asarray(im.convert("L")))
    raise ValueError(f"unsupported image format {suffix!r} (use .pgm or .png)")


def save_mask_ppm(mask: BinaryMask, path) -> None:
    """Render a mask as a binary PPM (white road on black) for debugging."""
    rgb = np.zeros((mask.height, mask.width, 3), dtype=np.uint8)
    rgb[mask.bits] = 255
    header = f"P6\n{mask.width} {mask.height}\n255\n".encode()
    Path(path).write_bytes(header + rgb.tobytes())
