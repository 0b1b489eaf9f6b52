"""Self-occlusion: visible/hidden surface partition and the hidden-area ratio.

A mesh is subdivided into small sub-faces; a sub-face is visible when it is
front-facing and the segment from the camera to its centroid is not blocked
by any strictly nearer sub-face. Self-occlusion is hidden area over total
area, a number in [0, 1] (a sphere viewed from far away approaches 0.5).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .geometry import TriMesh, is_closed, subdivide, surface_area, triangle_areas
from .objects import ObjectSpec, assemble_mesh
from .raycast import Bvh
from .viewsphere import CameraPose, Viewpoint, look_at, map_to_tile

# "Strictly nearer" slack, as a fraction of the scene diameter.
_EPS_DIAMETER = 1e-6


@dataclass(frozen=True)
class VisibilityPartition:
    visible: TriMesh
    hidden: TriMesh
    visible_area: float
    hidden_area: float


@dataclass(frozen=True)
class OcclusionRecord:
    object_id: str
    view_index: int
    so: float
    tile: int
    camera_position: np.ndarray


class _MeshView:
    """Subdivided mesh plus its BVH, reusable across many cameras."""

    def __init__(self, mesh: TriMesh, max_edge: float):
        if surface_area(mesh) <= 0.0:
            raise ValueError("mesh has zero surface area")
        if not is_closed(mesh):
            raise ValueError("mesh is not closed")
        self.sub = subdivide(mesh, max_edge)
        self.areas = triangle_areas(self.sub)
        self.centroids = self.sub.centroids()
        self.normals = self.sub.normals
        self.bvh = Bvh.build(self.sub.corners())
        box = self.sub.aabb()
        self.diameter = float(np.linalg.norm(box.extents))
        self._box = box

    def camera_outside(self, position: np.ndarray) -> bool:
        if np.any(position < self._box.min) or np.any(position > self._box.max):
            return True
        # Inside the bounding box: decide by crossing parity along one ray.
        probe = self._box.max + self.diameter * np.array([0.013, 1.0, 0.027])
        return self.bvh.count_hits(position, probe - position) % 2 == 0

    def visible_faces(self, camera: CameraPose) -> np.ndarray:
        """Boolean mask of sub-faces visible from the camera."""
        cam = np.asarray(camera.position, dtype=np.float64)
        to_cam = cam[None, :] - self.centroids
        front = np.einsum("ij,ij->i", self.normals, to_cam) > 0.0
        # Frustum safety: anything behind the camera plane cannot be seen.
        ahead = (-to_cam) @ camera.forward > 0.0
        cand = np.nonzero(front & ahead)[0]
        visible = np.zeros(len(self.centroids), dtype=bool)
        if len(cand) == 0:
            return visible
        dirs = self.centroids[cand] - cam
        dist = np.linalg.norm(dirs, axis=1)
        eps = _EPS_DIAMETER * self.diameter
        margin = eps / dist
        blocked = self.bvh.any_hit(cam, dirs, margin, 1.0 - margin, cand)
        visible[cand[~blocked]] = True
        return visible


def visible_partition(mesh: TriMesh, camera: CameraPose, max_edge: float) -> VisibilityPartition:
    """Split a closed mesh into visible and hidden sub-meshes for one camera."""
    view = _MeshView(mesh, max_edge)
    if not view.camera_outside(np.asarray(camera.position, dtype=np.float64)):
        raise ValueError("camera must be outside the mesh")
    mask = view.visible_faces(camera)
    sub = view.sub
    visible = TriMesh.build(sub.vertices, sub.faces[mask])
    hidden = TriMesh.build(sub.vertices, sub.faces[~mask])
    return VisibilityPartition(
        visible=visible,
        hidden=hidden,
        visible_area=float(view.areas[mask].sum()),
        hidden_area=float(view.areas[~mask].sum()),
    )


def self_occlusion(mesh: TriMesh, camera: CameraPose, max_edge: float) -> float:
    """Hidden fraction of the total surface area, in [0, 1]."""
    part = visible_partition(mesh, camera, max_edge)
    return part.hidden_area / (part.visible_area + part.hidden_area)


def bounding_sphere(mesh: TriMesh) -> tuple[np.ndarray, float]:
    """Center and radius of the AABB circumsphere."""
    box = mesh.aabb()
    return box.center, float(np.linalg.norm(box.extents) / 2.0)


def occlusion_table(
    specs: list[ObjectSpec], viewpoints: list[Viewpoint], max_edge: float
) -> list[OcclusionRecord]:
    """One record per (object, view), object-major then view-minor.

    Viewpoint positions are object-relative: they are scaled by each object's
    bounding-sphere radius around the object's center, so a lattice of radius
    2 places every camera at twice the bounding radius. Camera positions in
    the records are relative to the object center.
    """
    records: list[OcclusionRecord] = []
    for spec in specs:
        mesh = assemble_mesh(spec)
        records.extend(_object_records(spec.object_id, mesh, viewpoints, max_edge))
    return records


def _object_records(object_id, mesh, viewpoints, max_edge) -> list[OcclusionRecord]:
    center, radius = bounding_sphere(mesh)
    centered = TriMesh.build(mesh.vertices - center, mesh.faces)
    view = _MeshView(centered, max_edge)
    total = view.areas.sum()
    out = []
    for vp in viewpoints:
        cam_pos = vp.position * radius
        camera = look_at(cam_pos, np.zeros(3))
        mask = view.visible_faces(camera)
        so = float(view.areas[~mask].sum() / total)
        out.append(
            OcclusionRecord(
                object_id=object_id,
                view_index=vp.index,
                so=so,
                tile=map_to_tile(cam_pos),
                camera_position=cam_pos,
            )
        )
    return out


# Histogram bins: below 50%, seven 5-point bins, above 85%.
HIST_LABELS = ("<50", "50-55", "55-60", "60-65", "65-70", "70-75", "75-80", "80-85", ">85")


def hist_label(so: float) -> str:
    if so < 0.50:
        return HIST_LABELS[0]
    if so >= 0.85:
        return HIST_LABELS[-1]
    return HIST_LABELS[1 + int((so - 0.50) / 0.05)]


@dataclass(frozen=True)
class GroupStats:
    key: str
    count: int
    mean: float
    min: float
    max: float
    histogram: dict[str, int]


@dataclass(frozen=True)
class OcclusionSummary:
    per_class: list[GroupStats]
    per_tile: list[GroupStats]


def summarize(records: list[OcclusionRecord], classes: dict[str, str] | None = None) -> OcclusionSummary:
    """Per-class and per-tile SO statistics.

    `classes` maps object id to a class label; by default each object is its
    own class. Class rows are sorted by label, tile rows by tile id.
    """
    if not records:
        raise ValueError("no records to summarize")
    by_class: dict[str, list[float]] = {}
    by_tile: dict[int, list[float]] = {}
    for rec in records:
        label = classes.get(rec.object_id, rec.object_id) if classes else rec.object_id
        by_class.setdefault(label, []).append(rec.so)
        by_tile.setdefault(rec.tile, []).append(rec.so)

    def stats(key: str, values: list[float]) -> GroupStats:
        arr = np.asarray(values)
        hist = {label: 0 for label in HIST_LABELS}
        for v in values:
            hist[hist_label(v)] += 1
        return GroupStats(key, len(values), float(arr.mean()), float(arr.min()), float(arr.max()), hist)

    per_class = [stats(k, v) for k, v in sorted(by_class.items())]
    per_tile = [stats(str(t), v) for t, v in sorted(by_tile.items())]
    return OcclusionSummary(per_class, per_tile)


def write_records_csv(records: list[OcclusionRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["object_id", "view_index", "tile", "so"])
        for rec in records:
            writer.writerow([rec.object_id, rec.view_index, rec.tile, repr(rec.so)])


def write_records_json(records: list[OcclusionRecord], path) -> None:
    rows = [
        {
            "object_id": rec.object_id,
            "view_index": rec.view_index,
            "tile": rec.tile,
            "so": rec.so,
            "camera_position": [float(c) for c in rec.camera_position],
        }
        for rec in records
    ]
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=2)
        fh.write("\n")


def write_summary_csv(groups: list[GroupStats], path, key_name: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([key_name, "count", "mean", "min", "max", *HIST_LABELS])
        for g in groups:
            writer.writerow(
                [g.key, g.count, f"{g.mean:.6f}", f"{g.min:.6f}", f"{g.max:.6f}"]
                + [g.histogram[label] for label in HIST_LABELS]
            )
