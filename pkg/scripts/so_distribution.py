#!/usr/bin/env python3
"""Self-occlusion distribution of the reference object families.

Runs the view lattice over the generated L1/L2 objects and prints per-level,
per-tile, and histogram summaries. Desk-scale by default; raise --views for
the full-resolution picture.

Usage:
    python scripts/so_distribution.py --family L1 --views 96 --max-edge 4
"""

import argparse
from collections import defaultdict

import numpy as np

from blockworld.objects import REFERENCE_SEED, complexity, generate_l1, generate_l2
from blockworld.occlusion import HIST_LABELS, hist_label, occlusion_table
from blockworld.viewsphere import fibonacci_lattice


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--family", choices=["L1", "L2"], default="L1")
    parser.add_argument("--seed", type=int, default=REFERENCE_SEED)
    parser.add_argument("--views", type=int, default=96)
    parser.add_argument("--max-edge", type=float, default=4.0)
    parser.add_argument("--radius-factor", type=float, default=2.0)
    args = parser.parse_args()

    specs = generate_l1(args.seed) if args.family == "L1" else generate_l2(args.seed)
    lattice = fibonacci_lattice(args.views, args.radius_factor)
    records = occlusion_table(specs, lattice, args.max_edge)

    level_of = {s.object_id: s.distractor_group for s in specs}
    compl_of = {s.distractor_group: complexity(s) for s in specs}
    by_level = defaultdict(list)
    by_tile = defaultdict(list)
    for rec in records:
        by_level[level_of[rec.object_id]].append(rec.so)
        by_tile[rec.tile].append(rec.so)

    so = np.array([r.so for r in records])
    print(f"{args.family} @ seed {args.seed}: {len(specs)} objects x {args.views} views")
    print(f"overall SO: mean {so.mean():.4f}, range [{so.min():.4f}, {so.max():.4f}]\n")

    print("level  compl  mean    min     max     spread")
    for level in sorted(by_level):
        v = np.array(by_level[level])
        print(
            f"{level:>5}  {compl_of[level]:>5}  {v.mean():.4f}  {v.min():.4f}  "
            f"{v.max():.4f}  {v.max() - v.min():.4f}"
        )

    print("\ntile   count  mean")
    for tile in sorted(by_tile):
        v = np.array(by_tile[tile])
        print(f"oh_{tile}   {len(v):>5}  {v.mean():.4f}")
    best = min(by_tile, key=lambda t: np.mean(by_tile[t]))
    print(f"lowest-occlusion tile: oh_{best}")

    hist = {label: 0 for label in HIST_LABELS}
    for rec in records:
        hist[hist_label(rec.so)] += 1
    print("\nhistogram (5-point bins):")
    for label in HIST_LABELS:
        bar = "#" * round(60 * hist[label] / max(1, len(records)))
        print(f"{label:>6}  {hist[label]:>6}  {bar}")


if __name__ == "__main__":
    main()
