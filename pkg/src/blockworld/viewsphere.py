"""Viewpoint sampling on a sphere, look-at camera poses, octant tile mapping.

Viewpoints come from a golden-angle spiral with half-integer offset, which
distributes n points nearly uniformly and avoids placing any point exactly on
a pole. Positions are in object-relative units: the dataset pipeline scales
them by each object's bounding-sphere radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class Viewpoint:
    index: int
    position: np.ndarray  # (3,), |position| == radius
    radius: float


@dataclass(frozen=True)
class CameraPose:
    """Position plus an orthonormal rotation with columns (right, up, -forward)."""

    position: np.ndarray
    rotation: np.ndarray  # (3, 3)

    @property
    def forward(self) -> np.ndarray:
        return -self.rotation[:, 2]

    @property
    def up(self) -> np.ndarray:
        return self.rotation[:, 1]

    @property
    def right(self) -> np.ndarray:
        return self.rotation[:, 0]


def fibonacci_lattice(n: int, radius: float) -> list[Viewpoint]:
    """n near-uniform viewpoints on a sphere of the given radius.

    Point i sits at height z_i = (1 - 2(i + 0.5)/n) * radius with azimuth
    phi_i = 2*pi*i*(1 - 1/golden_ratio).
    """
    if n < 1:
        raise ValueError(f"need at least one viewpoint, got n={n}")
    if not (radius > 0.0):
        raise ValueError(f"radius must be positive, got {radius}")
    i = np.arange(n, dtype=np.float64)
    z = (1.0 - 2.0 * (i + 0.5) / n) * radius
    phi = 2.0 * math.pi * i * (1.0 - 1.0 / GOLDEN_RATIO)
    rho = np.sqrt(np.maximum(radius * radius - z * z, 0.0))
    pts = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    out = []
    for k in range(n):
        p = pts[k].copy()
        p.setflags(write=False)
        out.append(Viewpoint(index=k, position=p, radius=radius))
    return out


def look_at(position, target) -> CameraPose:
    """Camera at `position` looking at `target`, up reference world +Y.

    right = forward x up_reference, up = right x forward. When forward is
    parallel to +Y the reference falls back to world +X.
    """
    position = np.asarray(position, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    offset = target - position
    dist = np.linalg.norm(offset)
    if dist == 0.0:
        raise ValueError("camera position and target coincide")
    forward = offset / dist
    up_ref = np.array([0.0, 1.0, 0.0])
    if abs(float(np.dot(forward, up_ref))) > 1.0 - 1e-9:
        up_ref = np.array([1.0, 0.0, 0.0])
    right = np.cross(forward, up_ref)
    right /= np.linalg.norm(right)
    up = np.cross(right, forward)
    rotation = np.stack([right, up, -forward], axis=1)
    pos = position.copy()
    pos.setflags(write=False)
    rotation.setflags(write=False)
    return CameraPose(position=pos, rotation=rotation)


def map_to_tile(position) -> int:
    """Octant tile id 1..8 of a point on (or off) the view sphere.

    The sphere is tiled by the eight spherical triangles of an inscribed
    octahedron; membership reduces to the sign pattern of (x, y, z). Tile id
    is 1 + (4 if x < 0) + (2 if y < 0) + (1 if z < 0); exact zeros count as
    positive.
    """
    p = np.asarray(position, dtype=np.float64)
    if float(np.linalg.norm(p)) == 0.0:
        raise ValueError("cannot map the zero vector to a tile")
    code = 4 * int(p[0] < 0.0) + 2 * int(p[1] < 0.0) + int(p[2] < 0.0)
    return code + 1


def viewpoints_to_json(viewpoints: list[Viewpoint]) -> list[dict]:
    """JSON-ready rows [{index, x, y, z, tile}] for a viewpoint list."""
    rows = []
    for vp in viewpoints:
        x, y, z = (float(c) for c in vp.position)
        rows.append({"index": vp.index, "x": x, "y": y, "z": z, "tile": map_to_tile(vp.position)})
    return rows
