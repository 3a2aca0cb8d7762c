"""Generate a synthetic road image: a bright band on a dark background.

The band follows a smooth sine arc with a random phase and amplitude, so
repeated runs with different seeds give distinct but well-behaved roads.
Output is binary PGM, readable by `roadgen extract` with no extra deps.
"""

import argparse

import numpy as np
from scipy.spatial import cKDTree

from roadgen.imaging import GrayImage, save_pgm


def synth_road(rng, width, height, halfwidth, noise=0.0):
    margin = 10.0
    t = np.linspace(0.0, 1.0, 800)
    phase = rng.uniform(0.0, 2 * np.pi)
    amp = rng.uniform(0.15, 0.3) * height
    cx = margin + t * (width - 2 * margin)
    # sin(pi t) envelope keeps the endpoints on the horizontal midline
    cy = height / 2 + amp * np.sin(2 * np.pi * t + phase) * np.sin(np.pi * t)
    tree = cKDTree(np.column_stack([cx, cy]))
    yy, xx = np.mgrid[0:height, 0:width]
    centers = np.column_stack([xx.ravel() + 0.5, yy.ravel() + 0.5])
    d, _ = tree.query(centers)
    pixels = np.where(d.reshape(height, width) <= halfwidth, 230.0, 10.0)
    if noise > 0:
        pixels = pixels + rng.normal(0.0, noise, pixels.shape)
    return GrayImage(np.clip(pixels, 0, 255).astype(np.uint8))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="road.pgm")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--width", type=int, default=96)
    parser.add_argument("--height", type=int, default=96)
    parser.add_argument("--halfwidth", type=float, default=4.0)
    parser.add_argument("--noise", type=float, default=0.0,
                        help="stddev of additive gray noise")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    img = synth_road(rng, args.width, args.height, args.halfwidth, args.noise)
    save_pgm(img, args.out)
    print(f"wrote {args.width}x{args.height} road image -> {args.out}")


if __name__ == "__main__":
    main()
