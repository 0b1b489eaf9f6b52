"""Blocks-world object families, viewpoint sampling, and self-occlusion measurement."""

from .geometry import (
    Aabb,
    TriMesh,
    cuboid_mesh,
    read_stl,
    subdivide,
    surface_area,
    union_boundary,
    write_stl,
)
from .objects import (
    REFERENCE_SEED,
    ObjectSpec,
    assemble_mesh,
    complexity,
    generate_l1,
    generate_l2,
    height_stage,
    validate,
)
from .occlusion import occlusion_table, self_occlusion, summarize, visible_partition
from .render import bounding_box, read_mask, render_mask, write_mask
from .viewsphere import CameraPose, Viewpoint, fibonacci_lattice, look_at, map_to_tile

__version__ = "0.1.0"

__all__ = [
    "Aabb",
    "CameraPose",
    "ObjectSpec",
    "REFERENCE_SEED",
    "TriMesh",
    "Viewpoint",
    "assemble_mesh",
    "bounding_box",
    "complexity",
    "cuboid_mesh",
    "fibonacci_lattice",
    "generate_l1",
    "generate_l2",
    "height_stage",
    "look_at",
    "map_to_tile",
    "occlusion_table",
    "read_mask",
    "read_stl",
    "render_mask",
    "self_occlusion",
    "subdivide",
    "summarize",
    "surface_area",
    "union_boundary",
    "validate",
    "visible_partition",
    "write_mask",
    "write_stl",
]
