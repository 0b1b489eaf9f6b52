#!/usr/bin/env python3
"""How the self-occlusion estimate behaves as the subdivision is refined.

Convex shapes classify identically at every subdivision level (sub-faces
inherit their parent plane), so their SO is exact immediately. Non-convex
assemblies converge as max_edge shrinks because shadow boundaries land inside
faces. This script prints both behaviours side by side.

Usage:
    python scripts/convergence_study.py --edges 8 4 2 1
"""

import argparse

import numpy as np

from blockworld.geometry import TriMesh, cuboid_mesh
from blockworld.objects import REFERENCE_SEED, assemble_mesh, generate_l1
from blockworld.occlusion import bounding_sphere, self_occlusion
from blockworld.viewsphere import look_at

_T = (1.0 + 5.0**0.5) / 2.0


def icosphere(subdiv: int, radius: float) -> TriMesh:
    verts = np.array(
        [
            [-1, _T, 0], [1, _T, 0], [-1, -_T, 0], [1, -_T, 0],
            [0, -1, _T], [0, 1, _T], [0, -1, -_T], [0, 1, -_T],
            [_T, 0, -1], [_T, 0, 1], [-_T, 0, -1], [-_T, 0, 1],
        ],
        dtype=float,
    )
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    tri = verts[faces]
    for _ in range(subdiv):
        a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
        ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
        tri = np.concatenate(
            [np.stack([a, ab, ca], 1), np.stack([ab, b, bc], 1),
             np.stack([ca, bc, c], 1), np.stack([ab, bc, ca], 1)]
        )
    pts = tri.reshape(-1, 3)
    pts = pts / np.linalg.norm(pts, axis=1)[:, None] * radius
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    return TriMesh.build(uniq, inv.reshape(-1, 3))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--edges", type=float, nargs="+", default=[8.0, 4.0, 2.0, 1.0])
    parser.add_argument("--level", type=int, default=3, help="complexity level of the test assembly")
    args = parser.parse_args()

    cube = cuboid_mesh((20, 20, 20))
    sphere = icosphere(3, 20.0)
    assembly = assemble_mesh(generate_l1(REFERENCE_SEED)[2 * (args.level - 1)])

    shapes = []
    for name, mesh in (("cube 20mm", cube), ("icosphere r=20", sphere), (f"L1 level {args.level}", assembly)):
        center, radius = bounding_sphere(mesh)
        direction = np.array([1.3, 0.8, 1.1])
        cam = look_at(center + direction / np.linalg.norm(direction) * 2 * radius, center)
        shapes.append((name, mesh, cam))

    header = "max_edge  " + "  ".join(f"{name:>16}" for name, _, _ in shapes)
    print(header)
    prev = None
    values = {}
    for edge in args.edges:
        row = [f"{edge:>8}"]
        for name, mesh, cam in shapes:
            so = self_occlusion(mesh, cam, edge)
            values[(name, edge)] = so
            row.append(f"{so:>16.6f}")
        print("  ".join(row))
        prev = edge

    print("\n|delta| between successive rows:")
    for i in range(1, len(args.edges)):
        e0, e1 = args.edges[i - 1], args.edges[i]
        row = [f"{e0}->{e1:<5}"]
        for name, _, _ in shapes:
            row.append(f"{abs(values[(name, e0)] - values[(name, e1)]):>16.2e}")
        print("  ".join(row))


if __name__ == "__main__":
    main()
