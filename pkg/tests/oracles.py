"""Independent reference implementations used to cross-check the package.

Everything here is written from the definitions, deliberately avoiding the
vectorized/library code paths used by the package itself: temporal operators
are evaluated by direct quantifier scans, blurs by explicit kernel
accumulation, connectivity by BFS flood fill.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

from roadgen.signals import SampledSignal, Trace
from roadgen.stl import (
    Always,
    And,
    Eventually,
    Interval,
    Not,
    Or,
    Pred,
    TrueFormula,
    Until,
)

BIG = 1e9


# ---------------------------------------------------------------------------
# Temporal logic semantics by direct recursion


def _window_indices(ts, i, interval):
    if interval is None:
        return list(range(i, len(ts)))
    lo = ts[i] + interval.a
    hi = ts[i] + interval.b
    return [j for j in range(len(ts)) if lo <= ts[j] <= hi]


def stl_bool(formula, trace: Trace, i: int) -> bool:
    """Boolean satisfaction at sample i, straight from the quantifiers."""
    ts = trace.timestamps
    if isinstance(formula, TrueFormula):
        return True
    if isinstance(formula, Pred):
        v = float(trace.signals[formula.signal_name].values[i])
        c = formula.threshold
        return {"<": v < c, "<=": v <= c, ">": v > c, ">=": v >= c}[formula.comparator]
    if isinstance(formula, Not):
        return not stl_bool(formula.child, trace, i)
    if isinstance(formula, And):
        return stl_bool(formula.left, trace, i) and stl_bool(formula.right, trace, i)
    if isinstance(formula, Or):
        return stl_bool(formula.left, trace, i) or stl_bool(formula.right, trace, i)
    if isinstance(formula, Eventually):
        win = _window_indices(ts, i, formula.interval)
        return any(stl_bool(formula.child, trace, j) for j in win)
    if isinstance(formula, Always):
        win = _window_indices(ts, i, formula.interval)
        return all(stl_bool(formula.child, trace, j) for j in win)
    if isinstance(formula, Until):
        win = _window_indices(ts, i, formula.interval)
        return any(
            stl_bool(formula.right, trace, j)
            and all(stl_bool(formula.left, trace, k) for k in range(i, j + 1))
            for j in win
        )
    raise TypeError(formula)


def stl_rho(formula, trace: Trace, i: int) -> float:
    """Robustness at sample i: min/max recursion over explicit index sets."""
    ts = trace.timestamps
    if isinstance(formula, TrueFormula):
        return math.inf
    if isinstance(formula, Pred):
        v = float(trace.signals[formula.signal_name].values[i])
        c = formula.threshold
        if formula.comparator in (">", ">="):
            return v - c
        return c - v
    if isinstance(formula, Not):
        return -stl_rho(formula.child, trace, i)
    if isinstance(formula, And):
        return min(stl_rho(formula.left, trace, i), stl_rho(formula.right, trace, i))
    if isinstance(formula, Or):
        return max(stl_rho(formula.left, trace, i), stl_rho(formula.right, trace, i))
    if isinstance(formula, Eventually):
        win = _window_indices(ts, i, formula.interval)
        if not win:
            return -BIG
        return max(stl_rho(formula.child, trace, j) for j in win)
    if isinstance(formula, Always):
        win = _window_indices(ts, i, formula.interval)
        if not win:
            return BIG
        return min(stl_rho(formula.child, trace, j) for j in win)
    if isinstance(formula, Until):
        win = _window_indices(ts, i, formula.interval)
        if not win:
            return -BIG
        best = -math.inf
        for j in win:
            run = min(stl_rho(formula.left, trace, k) for k in range(i, j + 1))
            best = max(best, min(stl_rho(formula.right, trace, j), run))
        return best
    raise TypeError(formula)


# ---------------------------------------------------------------------------
# Random formulas and traces for differential testing

SIGNAL_NAMES = ("s0", "s1", "s2")


def random_trace(rng: np.random.Generator, max_len: int = 40) -> Trace:
    n = int(rng.integers(3, max_len + 1))
    ts = np.cumsum(rng.uniform(0.05, 0.5, n))
    ts -= ts[0]
    signals = {}
    for name in SIGNAL_NAMES:
        base = rng.uniform(-15.0, 15.0)
        walk = np.cumsum(rng.normal(0.0, 2.0, n))
        signals[name] = SampledSignal(name, ts, base + walk)
    return Trace(signals=signals)


def _random_interval(rng: np.random.Generator, span: float) -> Interval:
    a, b = np.sort(rng.uniform(0.0, 1.2 * span, 2))
    return Interval(float(a), float(b))


def random_formula(rng: np.random.Generator, depth: int, span: float):
    if depth <= 0:
        if rng.random() < 0.05:
            return TrueFormula()
        name = SIGNAL_NAMES[rng.integers(0, len(SIGNAL_NAMES))]
        comparator = ("<", "<=", ">", ">=")[rng.integers(0, 4)]
        return Pred(name, comparator, float(rng.uniform(-20.0, 20.0)))
    kind = rng.integers(0, 8)
    sub = lambda: random_formula(rng, depth - 1, span)
    if kind == 0:
        return Not(sub())
    if kind == 1:
        return And(sub(), sub())
    if kind == 2:
        return Or(sub(), sub())
    if kind == 3:
        return Eventually(None, sub())
    if kind == 4:
        return Always(None, sub())
    if kind == 5:
        return Eventually(_random_interval(rng, span), sub())
    if kind == 6:
        return Always(_random_interval(rng, span), sub())
    return Until(_random_interval(rng, span), sub(), sub())


# ---------------------------------------------------------------------------
# Dense Gaussian convolution with symmetric padding


def gaussian_blur_dense(pixels: np.ndarray, sigma: float, truncate: float = 3.0) -> np.ndarray:
    """Direct kernel accumulation; mirrors edge handling by symmetric pad."""
    img = pixels.astype(float)
    if sigma <= 0:
        return img
    radius = int(truncate * sigma + 0.5)
    x = np.arange(-radius, radius + 1, dtype=float)
    k1 = np.exp(-0.5 * (x / sigma) ** 2)
    k1 /= k1.sum()
    k2 = np.outer(k1, k1)
    padded = np.pad(img, radius, mode="symmetric")
    out = np.zeros_like(img)
    h, w = img.shape
    for dy in range(2 * radius + 1):
        for dx in range(2 * radius + 1):
            out += k2[dy, dx] * padded[dy : dy + h, dx : dx + w]
    return out


# ---------------------------------------------------------------------------
# Grid connectivity and cell enumeration


def flood4(bits: np.ndarray, start: tuple[int, int]) -> np.ndarray:
    """Cells reachable from start by 4-neighbor steps inside True cells."""
    seen = np.zeros_like(bits, dtype=bool)
    if not bits[start]:
        return seen
    queue = deque([start])
    seen[start] = True
    h, w = bits.shape
    while queue:
        r, c = queue.popleft()
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < h and 0 <= cc < w and bits[rr, cc] and not seen[rr, cc]:
                seen[rr, cc] = True
                queue.append((rr, cc))
    return seen


def is_4_connected(bits: np.ndarray) -> bool:
    coords = np.argwhere(bits)
    if len(coords) == 0:
        return True
    reached = flood4(bits, tuple(coords[0]))
    return bool((reached == bits).all())


def segment_cells(p0, p1, step: float = 1e-3) -> set[tuple[int, int]]:
    """Cells (col, row) hit by dense sampling along the segment p0-p1."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    n = max(2, int(np.linalg.norm(p1 - p0) / step))
    t = np.linspace(0.0, 1.0, n)
    pts = p0[None, :] + t[:, None] * (p1 - p0)[None, :]
    cells = np.floor(pts).astype(int)
    return {(int(x), int(y)) for x, y in cells}


# Hand-enumerated neighbor code table, keyed (north, east, south, west).
NEIGHBOR_CODES = {
    (False, False, False, False): 0,
    (True, False, False, False): 1,
    (False, True, False, False): 2,
    (True, True, False, False): 3,
    (False, False, True, False): 4,
    (True, False, True, False): 5,
    (False, True, True, False): 6,
    (True, True, True, False): 7,
    (False, False, False, True): 8,
    (True, False, False, True): 9,
    (False, True, False, True): 10,
    (True, True, False, True): 11,
    (False, False, True, True): 12,
    (True, False, True, True): 13,
    (False, True, True, True): 14,
    (True, True, True, True): 15,
}


# ---------------------------------------------------------------------------
# Pixel-space helpers for contour checks


def boundary_pixels(bits: np.ndarray) -> set[tuple[int, int]]:
    """(row, col) foreground pixels with a background 8-neighbor or on the rim."""
    h, w = bits.shape
    out = set()
    for r, c in np.argwhere(bits):
        if r == 0 or c == 0 or r == h - 1 or c == w - 1:
            out.add((int(r), int(c)))
            continue
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if (dr or dc) and not bits[r + dr, c + dc]:
                    out.add((int(r), int(c)))
                    break
    return out


def boundary_pixels_edge(bits: np.ndarray) -> set[tuple[int, int]]:
    """(row, col) foreground pixels sharing an edge with background or rim."""
    h, w = bits.shape
    out = set()
    for r, c in np.argwhere(bits):
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            rr, cc = r + dr, c + dc
            if not (0 <= rr < h and 0 <= cc < w) or not bits[rr, cc]:
                out.add((int(r), int(c)))
                break
    return out


def enclosed_region(contour_xy: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Pixels on or inside a closed contour, by flooding the outside."""
    h, w = shape
    wall = np.zeros((h + 2, w + 2), dtype=bool)
    for x, y in contour_xy:
        wall[int(y) + 1, int(x) + 1] = True
    outside = flood4(~wall, (0, 0))
    inside = ~outside
    return inside[1 : h + 1, 1 : w + 1]


def fill_holes(bits: np.ndarray) -> np.ndarray:
    """Foreground plus any background pockets not reachable from the rim."""
    padded = np.pad(bits, 1, constant_values=False)
    outside = flood4(~padded, (0, 0))
    return ~outside[1:-1, 1:-1]


def random_blob(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    """Connected, hole-free foreground blob: disks stamped along a walk."""
    bits = np.zeros((h, w), dtype=bool)
    r = np.array([h / 2, w / 2]) + rng.uniform(-h / 6, h / 6, 2)
    yy, xx = np.mgrid[0:h, 0:w]
    for _ in range(int(rng.integers(3, 9))):
        rad = rng.uniform(1.5, min(h, w) / 5)
        bits |= (yy - r[0]) ** 2 + (xx - r[1]) ** 2 <= rad**2
        r = np.clip(r + rng.uniform(-rad, rad, 2), 2, [h - 3, w - 3])
    return fill_holes(bits)
