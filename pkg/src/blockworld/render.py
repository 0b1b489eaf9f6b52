"""Binary object masks from a pinhole camera, plus pixel bounding boxes.

One primary ray per pixel center, no anti-aliasing: masks are decision-exact
and bit-reproducible. Files are binary PGM (P5, maxval 255) holding only 0
and 255.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import TriMesh
from .raycast import Bvh
from .viewsphere import CameraPose


class MaskParseError(ValueError):
    """Malformed PGM mask file."""


@dataclass(frozen=True)
class MaskImage:
    width: int
    height: int
    bits: np.ndarray  # (height, width) uint8 of 0/1, row 0 at the top

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("mask dimensions must be positive")
        if self.bits.shape != (self.height, self.width):
            raise ValueError("bits shape does not match dimensions")

    def pixel_count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class PixelBox:
    x_min: int
    y_min: int
    x_max: int
    y_max: int


def fitted_vfov(bounding_radius: float, distance: float, fill: float = 0.9) -> float:
    """Vertical FOV in degrees so a bounding sphere spans `fill` of the image height."""
    if not (0.0 < bounding_radius < distance):
        raise ValueError("need 0 < bounding_radius < distance")
    return 2.0 * math.degrees(math.asin(bounding_radius / distance)) / fill


def render_mask(
    mesh: TriMesh,
    camera: CameraPose,
    resolution: int,
    vfov: float,
    _bvh: Bvh | None = None,
) -> MaskImage:
    """Square binary mask: pixel 1 where the primary ray hits the mesh."""
    if resolution < 1:
        raise ValueError(f"resolution must be >= 1, got {resolution}")
    if not (0.0 < vfov < 180.0):
        raise ValueError(f"vfov must be in (0, 180) degrees, got {vfov}")
    w = h = int(resolution)
    if mesh.num_faces == 0:
        return MaskImage(w, h, np.zeros((h, w), dtype=np.uint8))
    bvh = _bvh if _bvh is not None else Bvh.build(mesh.corners())

    tan_half = math.tan(math.radians(vfov) / 2.0)
    px = (np.arange(w) + 0.5) / w * 2.0 - 1.0
    py = 1.0 - (np.arange(h) + 0.5) / h * 2.0
    xs, ys = np.meshgrid(px * tan_half, py * tan_half)
    dirs_cam = np.stack([xs, ys, -np.ones_like(xs)], axis=-1).reshape(-1, 3)
    dirs = dirs_cam @ camera.rotation.T

    hit = bvh.any_hit(camera.position, dirs, 1e-12, np.inf, -1)
    return MaskImage(w, h, hit.reshape(h, w).astype(np.uint8))


def bounding_box(mask: MaskImage) -> PixelBox | None:
    """Tight box over set pixels, or None for an empty mask."""
    ys, xs = np.nonzero(mask.bits)
    if len(xs) == 0:
        return None
    return PixelBox(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))


def write_mask(mask: MaskImage, path) -> None:
    header = f"P5\n{mask.width} {mask.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write((mask.bits * np.uint8(255)).tobytes())


_PGM_HEADER = re.compile(rb"^P5\n(\d+) (\d+)\n255\n", re.S)


def read_mask(path) -> MaskImage:
    data = Path(path).read_bytes()
    m = _PGM_HEADER.match(data)
    if not m:
        raise MaskParseError(f"{path}: not a binary PGM mask (expected 'P5\\n<w> <h>\\n255\\n')")
    w, h = int(m.group(1)), int(m.group(2))
    body = data[m.end():]
    if len(body) != w * h:
        raise MaskParseError(f"{path}: expected {w * h} pixel bytes, found {len(body)}")
    pixels = np.frombuffer(body, dtype=np.uint8)
    bad = ~np.isin(pixels, (0, 255))
    if bad.any():
        raise MaskParseError(f"{path}: pixel value {int(pixels[bad][0])} is neither 0 nor 255")
    return MaskImage(w, h, (pixels.reshape(h, w) == 255).astype(np.uint8))
