"""Command line interface.

Subcommands: generate (build a dataset tree), stats (summary CSVs), validate
(re-check an existing tree), so (self-occlusion of one mesh from one camera),
views (dump the view lattice). Exit codes: 0 ok, 1 failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .dataset import DatasetConfig, dataset_stats, generate_dataset, validate_dataset
from .geometry import read_stl
from .objects import REFERENCE_SEED
from .occlusion import self_occlusion
from .viewsphere import fibonacci_lattice, look_at, viewpoints_to_json


def _parse_vec3(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected X,Y,Z, got {text!r}")
    return np.array([float(p) for p in parts])


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blockworld", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a dataset tree")
    gen.add_argument("--seed", type=int, default=REFERENCE_SEED)
    gen.add_argument("--family", choices=["L1", "L2", "both"], default="both")
    gen.add_argument("--views", type=int, default=768)
    gen.add_argument("--radius-factor", type=float, default=2.0)
    gen.add_argument("--max-edge", type=float, default=2.0)
    gen.add_argument("--resolution", type=int, default=512)
    gen.add_argument("--out", type=Path, required=True)
    gen.add_argument("--quiet", action="store_true", help="suppress progress lines")

    stats = sub.add_parser("stats", help="write per-class/per-tile/histogram CSVs")
    stats.add_argument("dataset", type=Path)
    stats.add_argument("--out", type=Path, default=None, help="stats directory (default <dataset>/stats)")

    val = sub.add_parser("validate", help="re-check an existing dataset tree")
    val.add_argument("dataset", type=Path)

    so = sub.add_parser("so", help="self-occlusion of one mesh from one camera")
    so.add_argument("--mesh", type=Path, required=True, help="binary STL file")
    so.add_argument("--camera", type=_parse_vec3, required=True, metavar="X,Y,Z")
    so.add_argument("--target", type=_parse_vec3, default=None, metavar="X,Y,Z",
                    help="look-at point (default: mesh AABB center)")
    so.add_argument("--max-edge", type=float, default=2.0)

    views = sub.add_parser("views", help="dump the view lattice as JSON")
    views.add_argument("--views", type=int, default=768)
    views.add_argument("--radius", type=float, default=2.0)
    views.add_argument("--out", type=Path, default=None, help="output file (default stdout)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "generate":
        try:
            config = DatasetConfig(
                out=args.out,
                seed=args.seed,
                family=args.family,
                views=args.views,
                radius_factor=args.radius_factor,
                max_edge=args.max_edge,
                resolution=args.resolution,
            )
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        try:
            manifest = generate_dataset(config, progress=not args.quiet)
        except Exception as exc:
            print(f"error: generation failed: {exc}", file=sys.stderr)
            return 1
        print(manifest)
        return 0

    if args.command == "stats":
        try:
            out = dataset_stats(args.dataset, args.out)
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        for stats in out["summary"].per_class:
            print(f"class {stats.key}: n={stats.count} mean={stats.mean:.4f} "
                  f"min={stats.min:.4f} max={stats.max:.4f}")
        tiles = out["summary"].per_tile
        best = min(tiles, key=lambda g: g.mean)
        print(f"lowest-occlusion tile: oh_{best.key} (mean {best.mean:.4f})")
        print(out["per_class"].parent)
        return 0

    if args.command == "validate":
        problems = validate_dataset(args.dataset)
        if problems:
            for p in problems:
                print(f"violation: {p}")
            print(f"{len(problems)} violation(s)")
            return 1
        print("ok")
        return 0

    if args.command == "so":
        try:
            mesh = read_stl(args.mesh)
            target = args.target if args.target is not None else mesh.aabb().center
            camera = look_at(args.camera, target)
            value = self_occlusion(mesh, camera, args.max_edge)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(repr(value))
        return 0

    if args.command == "views":
        try:
            rows = viewpoints_to_json(fibonacci_lattice(args.views, args.radius))
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        text = json.dumps(rows, indent=2)
        if args.out:
            args.out.write_text(text + "\n")
        else:
            print(text)
        return 0

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
