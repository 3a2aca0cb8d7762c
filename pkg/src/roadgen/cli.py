"""Command-line interface: one subcommand per pipeline stage plus the
end-to-end pipeline. Exit codes: 0 success (or SAT), 1 UNSAT from the
monitor, 2 usage or input error, 3 runtime or network error."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import geometry, imaging, perturb, protocol, stl, tiles
from .ioutil import atomic_write_text
from .signals import trace_from_json

EXIT_OK = 0
EXIT_UNSAT = 1
EXIT_INPUT = 2
EXIT_RUNTIME = 3


def _parse_endpoint(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"endpoint must be host:port, got {text!r}")
    return host or "127.0.0.1", int(port)


def _read_text(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_spline(path) -> geometry.Spline2D:
    return geometry.spline_from_json(_read_text(path))


def _preprocess_params(ns_or_dict) -> imaging.PreprocessParams:
    if isinstance(ns_or_dict, dict):
        return imaging.PreprocessParams(**ns_or_dict)
    return imaging.PreprocessParams(
        brightness_offset=ns_or_dict.brightness,
        contrast_gain=ns_or_dict.contrast,
        sharpness_amount=ns_or_dict.sharpness,
        blur_sigma=ns_or_dict.blur_sigma,
        threshold=ns_or_dict.threshold,
    )


def _extract_spline(image_path, params: imaging.PreprocessParams,
                    n_ctrl: int, stride: int, dump_ppm=None) -> geometry.Spline2D:
    img = imaging.load_image(image_path)
    pre = imaging.preprocess(img, params)
    mask = imaging.threshold(pre, params.threshold)
    if dump_ppm:
        imaging.save_mask_ppm(mask, dump_ppm)
    contours = imaging.trace_contour(mask)
    return imaging.contour_to_spline(contours[0], n_ctrl=n_ctrl, stride=stride)


# ---------------------------------------------------------------------------
# subcommands

def cmd_extract(args) -> int:
    spline = _extract_spline(args.image, _preprocess_params(args),
                             args.n_ctrl, args.stride, args.dump_ppm)
    atomic_write_text(args.out, geometry.spline_to_json(spline))
    print(f"extracted spline with {spline.n_ctrl} control points -> {args.out}")
    return EXIT_OK


def cmd_perturb(args) -> int:
    base = _load_spline(args.spline)
    spec_text = _read_text(args.spec).strip()
    formula = stl.parse_stl(spec_text)
    ranges = perturb.PerturbRanges(
        amplitude=tuple(args.amplitude), frequency=tuple(args.frequency),
        phase=tuple(args.phase), n_terms=args.terms, direction=args.direction)
    batch = perturb.generate_variants(
        base, formula, n=args.n, sampling=ranges, seed=args.seed,
        max_attempts=args.max_attempts, samples=args.samples,
        horizon=args.horizon, d1_reference=args.d1_reference)
    manifest = perturb.write_batch(batch, args.out, spec_text)
    attempts = len(batch.accepted) + batch.rejected_count
    print(f"accepted {len(batch.accepted)}/{attempts} attempts -> {manifest}")
    return EXIT_OK


def cmd_monitor(args) -> int:
    formula = stl.parse_stl(_read_text(args.spec).strip())
    trace = trace_from_json(_read_text(args.trace))
    verdict = stl.monitor(formula, trace)
    word = "SAT" if verdict.satisfied else "UNSAT"
    print(f"{word} ρ={verdict.robustness:.6g}")
    return EXIT_OK if verdict.satisfied else EXIT_UNSAT


def cmd_tiles(args) -> int:
    spline = _load_spline(args.spline)
    params = tiles.RasterParams(grid_width=args.grid_width, grid_height=args.grid_height,
                                road_halfwidth=args.halfwidth, samples=args.samples)
    mask = tiles.rasterize(spline, params)
    if args.dump_ppm:
        imaging.save_mask_ppm(mask, args.dump_ppm)
    grid = tiles.synthesize(mask)
    atomic_write_text(args.out, tiles.tilegrid_to_json(grid))
    road = int(np.count_nonzero(grid.cells != tiles.EMPTY))
    print(f"synthesized {grid.width}x{grid.height} grid with {road} road cells -> {args.out}")
    return EXIT_OK


def _parse_spawn(text: str) -> protocol.Spawn:
    parts = text.split(":")
    if len(parts) != 4:
        raise ValueError(f"spawn must be kind:x:y:heading, got {text!r}")
    return protocol.Spawn(kind=parts[0], x=float(parts[1]), y=float(parts[2]),
                          heading=float(parts[3]))


def cmd_send(args) -> int:
    grid = tiles.tilegrid_from_json(_read_text(args.grid))
    spawns = [_parse_spawn(s) for s in args.spawn]
    ack = protocol.send_scene(grid, spawns, _parse_endpoint(args.endpoint),
                              transport=args.transport, tile_size=args.tile_size,
                              scene_id=args.scene_id)
    print(f"ack: {ack.detail}" if ack is not None else "sent (fire-and-forget)")
    return EXIT_OK


def cmd_serve(args) -> int:
    host, port = _parse_endpoint(args.endpoint)
    server = protocol.SceneServer(host, port, args.transport, args.out)
    server.bind()
    print(f"listening on {server.address[0]}:{server.address[1]} ({args.transport}), "
          f"dumping to {args.out}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def cmd_pipeline(args) -> int:
    config = json.loads(_read_text(args.config))
    if not isinstance(config, dict) or "image" not in config:
        raise ValueError("pipeline config must be a JSON object with an 'image' path")
    config_dir = Path(args.config).resolve().parent
    image_path = Path(config["image"])
    if not image_path.is_absolute():
        image_path = config_dir / image_path

    # validate everything up front: no outputs are written on a config error
    pre_params = _preprocess_params(config.get("preprocess", {}))
    fit_cfg = config.get("fit", {})
    n_ctrl = int(fit_cfg.get("n_ctrl", 12))
    stride = int(fit_cfg.get("stride", 2))
    raster_cfg = config.get("raster", {})
    raster_params = tiles.RasterParams(**raster_cfg)
    perturb_cfg = config.get("perturb")
    formula = spec_text = ranges = None
    if perturb_cfg is not None:
        spec_text = perturb_cfg["spec"].strip()
        formula = stl.parse_stl(spec_text)
        ranges = perturb.PerturbRanges(
            amplitude=tuple(perturb_cfg.get("amplitude", (0.0, 5.0))),
            frequency=tuple(perturb_cfg.get("frequency", (2 * np.pi, 6 * np.pi))),
            phase=tuple(perturb_cfg.get("phase", (0.0, 2 * np.pi))),
            n_terms=int(perturb_cfg.get("n_terms", 1)),
            direction=perturb_cfg.get("direction", "normal"))
    spawns = [protocol.Spawn(**s) for s in config.get("spawns", [])]
    endpoint_text = args.endpoint or config.get("endpoint")
    endpoint = _parse_endpoint(endpoint_text) if endpoint_text else None
    transport = args.transport or config.get("transport", "stream")
    scene_id = config.get("scene_id", "pipeline")
    if not image_path.exists():
        raise ValueError(f"image not found: {image_path}")

    out_dir = Path(args.out or config.get("out_dir", "pipeline_out"))
    out_dir.mkdir(parents=True, exist_ok=True)

    base = _extract_spline(image_path, pre_params, n_ctrl, stride, args.dump_ppm)
    atomic_write_text(out_dir / "base_spline.json", geometry.spline_to_json(base))
    print(f"fitted base spline ({base.n_ctrl} control points)")

    if perturb_cfg is not None:
        seed = args.seed if args.seed is not None else int(perturb_cfg.get("seed", 0))
        batch = perturb.generate_variants(
            base, formula, n=int(perturb_cfg.get("n", 5)), sampling=ranges,
            seed=seed, max_attempts=int(perturb_cfg.get("max_attempts", 1000)),
            samples=int(perturb_cfg.get("samples", 256)),
            horizon=float(perturb_cfg.get("horizon", perturb.DEFAULT_HORIZON)))
        perturb.write_batch(batch, out_dir / "variants", spec_text)
        attempts = len(batch.accepted) + batch.rejected_count
        print(f"accepted {len(batch.accepted)} variants in {attempts} attempts")

    mask = tiles.rasterize(base, raster_params)
    grid = tiles.synthesize(mask)
    atomic_write_text(out_dir / "tiles.json", tiles.tilegrid_to_json(grid))
    road = int(np.count_nonzero(grid.cells != tiles.EMPTY))
    print(f"synthesized {grid.width}x{grid.height} grid with {road} road cells")

    if endpoint is not None:
        ack = protocol.send_scene(grid, spawns, endpoint, transport=transport,
                                  scene_id=scene_id)
        print(f"ack: {ack.detail}" if ack is not None else "sent (fire-and-forget)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roadgen",
        description="Road scenario tooling: image -> spline -> variants -> tiles -> scene server")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="fit a spline to the largest road contour of an image")
    p.add_argument("image", help="input image (.pgm, or .png with Pillow)")
    p.add_argument("--out", required=True, help="output spline JSON path")
    p.add_argument("--n-ctrl", type=int, default=12)
    p.add_argument("--stride", type=int, default=2)
    p.add_argument("--threshold", type=int, default=128)
    p.add_argument("--brightness", type=float, default=0.0)
    p.add_argument("--contrast", type=float, default=1.0)
    p.add_argument("--sharpness", type=float, default=0.0)
    p.add_argument("--blur-sigma", type=float, default=0.0)
    p.add_argument("--dump-ppm", default=None, help="debug: write the road mask as PPM")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("perturb", help="generate spec-satisfying sinusoidal variants")
    p.add_argument("spline", help="base spline JSON")
    p.add_argument("--spec", required=True, help="file containing the STL formula")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-attempts", type=int, default=1000)
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--horizon", type=float, default=perturb.DEFAULT_HORIZON)
    p.add_argument("--amplitude", type=float, nargs=2, default=(0.0, 5.0),
                   metavar=("LO", "HI"))
    p.add_argument("--frequency", type=float, nargs=2,
                   default=(2 * np.pi, 6 * np.pi), metavar=("LO", "HI"))
    p.add_argument("--phase", type=float, nargs=2, default=(0.0, 2 * np.pi),
                   metavar=("LO", "HI"))
    p.add_argument("--terms", type=int, default=1)
    p.add_argument("--direction", choices=perturb.DIRECTIONS, default="normal")
    p.add_argument("--d1-reference", choices=("base", "previous"), default="base")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("monitor", help="evaluate an STL formula on a trace")
    p.add_argument("trace", help="trace JSON file")
    p.add_argument("--spec", required=True, help="file containing the STL formula")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("tiles", help="rasterize a spline into a coded tile grid")
    p.add_argument("spline", help="spline JSON")
    p.add_argument("--out", required=True, help="output tile grid JSON path")
    p.add_argument("--grid-width", type=int, default=64)
    p.add_argument("--grid-height", type=int, default=64)
    p.add_argument("--halfwidth", type=float, default=1.5)
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--dump-ppm", default=None, help="debug: write the road mask as PPM")
    p.set_defaults(func=cmd_tiles)

    p = sub.add_parser("send", help="stream a tile grid to a scene server")
    p.add_argument("grid", help="tile grid JSON")
    p.add_argument("--endpoint", default=f"127.0.0.1:{protocol.DEFAULT_PORT}")
    p.add_argument("--transport", choices=protocol.TRANSPORTS, default="stream")
    p.add_argument("--tile-size", type=float, default=1.0)
    p.add_argument("--scene-id", default="scene")
    p.add_argument("--spawn", action="append", default=[],
                   metavar="KIND:X:Y:HEADING", help="agent spawn (repeatable)")
    p.set_defaults(func=cmd_send)

    p = sub.add_parser("serve", help="run the headless scene server")
    p.add_argument("--endpoint", default=f"127.0.0.1:{protocol.DEFAULT_PORT}",
                   help="address to listen on")
    p.add_argument("--transport", choices=protocol.TRANSPORTS, default="stream")
    p.add_argument("--out", default="scene_dump.json", help="scene dump path")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("pipeline", help="image -> spline -> variants -> tiles -> server")
    p.add_argument("config", help="pipeline config JSON")
    p.add_argument("--out", default=None, help="output directory (overrides config)")
    p.add_argument("--seed", type=int, default=None, help="override perturbation seed")
    p.add_argument("--endpoint", default=None, help="override scene server endpoint")
    p.add_argument("--transport", choices=protocol.TRANSPORTS, default=None)
    p.add_argument("--dump-ppm", default=None, help="debug: write the road mask as PPM")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (protocol.NackReceived, perturb.BudgetExhausted, ConnectionError,
            TimeoutError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, KeyError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
