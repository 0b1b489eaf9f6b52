"""Dataset orchestration: generate families, run views, write all artifacts.

Output tree (fully deterministic in the config):

    objects/<id>.json    assembly specs
    meshes/<id>.stl      model-frame meshes
    masks/<id>/<view>.pgm
    annotations.jsonl    one row per (object, view)
    occlusion.csv        object_id, view_index, tile, so
    manifest.json        config echo + per-object entries

Scene convention: each object is centered at the origin (its model-frame AABB
center maps to 0), cameras sit on the scaled view lattice and look at the
origin. Annotation rows carry the model-to-scene object pose so the scene is
reconstructible from the STL.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .geometry import TriMesh, read_stl, write_stl
from .objects import (
    REFERENCE_SEED,
    ObjectSpec,
    assemble_mesh,
    complexity,
    generate_l1,
    generate_l2,
    height_stage,
    spec_to_json,
)
from .occlusion import (
    OcclusionRecord,
    _MeshView,
    bounding_sphere,
    summarize,
    write_records_csv,
    write_summary_csv,
)
from .raycast import Bvh
from .render import bounding_box, fitted_vfov, render_mask, write_mask
from .viewsphere import fibonacci_lattice, look_at, map_to_tile

VFOV_FILL = 0.9  # bounding sphere spans 90% of the image height


@dataclass(frozen=True)
class DatasetConfig:
    out: Path
    seed: int = REFERENCE_SEED
    family: str = "both"  # "L1" | "L2" | "both"
    views: int = 768
    radius_factor: float = 2.0
    max_edge: float = 2.0
    resolution: int = 512

    def __post_init__(self):
        object.__setattr__(self, "out", Path(self.out))
        if self.family not in ("L1", "L2", "both"):
            raise ValueError(f"family must be L1, L2 or both, got {self.family!r}")
        if self.views < 1:
            raise ValueError("views must be >= 1")
        if not (self.radius_factor > 1.0):
            raise ValueError("radius_factor must exceed 1 (camera outside the object)")
        if not (self.max_edge > 0.0):
            raise ValueError("max_edge must be positive")
        if self.resolution < 1:
            raise ValueError("resolution must be >= 1")


def family_specs(family: str, seed: int) -> list[ObjectSpec]:
    if family == "L1":
        return generate_l1(seed)
    if family == "L2":
        return generate_l2(seed)
    return generate_l1(seed) + generate_l2(seed)


def _annotation_row(spec, view_index, box, object_position, camera, dims, so, tile) -> dict:
    return {
        "object_id": spec.object_id,
        "object_type": spec.class_label,
        "view_id": view_index,
        "bbox": None if box is None else [box.x_min, box.y_min, box.x_max, box.y_max],
        "object_position": [float(c) for c in object_position],
        "object_rotation": [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        "camera_position": [float(c) for c in camera.position],
        "camera_rotation": [float(c) for c in camera.rotation.reshape(-1)],
        "object_dimensions": [float(c) for c in dims],
        "so": so,
        "tile": tile,
    }


def generate_dataset(config: DatasetConfig, progress: bool = False) -> Path:
    """Build the full dataset tree; returns the manifest path."""
    out = config.out
    for sub in ("objects", "meshes", "masks"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    specs = family_specs(config.family, config.seed)
    lattice = fibonacci_lattice(config.views, config.radius_factor)
    vfov = fitted_vfov(1.0, config.radius_factor, VFOV_FILL)

    manifest_objects = []
    records: list[OcclusionRecord] = []
    with open(out / "annotations.jsonl", "w") as ann:
        for spec in specs:
            if progress:
                print(f"[generate] {spec.object_id} (n={spec.n})", file=sys.stderr, flush=True)
            (out / "objects" / f"{spec.object_id}.json").write_text(spec_to_json(spec) + "\n")
            mesh = assemble_mesh(spec)
            write_stl(mesh, out / "meshes" / f"{spec.object_id}.stl")
            center, radius = bounding_sphere(mesh)
            dims = mesh.aabb().extents
            centered = TriMesh.build(mesh.vertices - center, mesh.faces)
            view = _MeshView(centered, config.max_edge)
            total_area = view.areas.sum()
            mask_bvh = Bvh.build(centered.corners())
            mask_dir = out / "masks" / spec.object_id
            mask_dir.mkdir(exist_ok=True)

            for vp in lattice:
                cam_pos = vp.position * radius
                camera = look_at(cam_pos, np.zeros(3))
                visible = view.visible_faces(camera)
                so = float(view.areas[~visible].sum() / total_area)
                tile = map_to_tile(cam_pos)
                mask = render_mask(centered, camera, config.resolution, vfov, _bvh=mask_bvh)
                write_mask(mask, mask_dir / f"{vp.index:04d}.pgm")
                row = _annotation_row(
                    spec, vp.index, bounding_box(mask), -center, camera, dims, so, tile
                )
                ann.write(json.dumps(row, separators=(",", ":")) + "\n")
                records.append(
                    OcclusionRecord(spec.object_id, vp.index, so, tile, cam_pos)
                )

            manifest_objects.append(
                {
                    "id": spec.object_id,
                    "family": spec.family,
                    "class": spec.class_label,
                    "distractor_group": spec.distractor_group,
                    "n": spec.n,
                    "complexity": complexity(spec),
                    "height_stage": height_stage(spec),
                    "object_dimensions": [float(c) for c in dims],
                    "spec_path": f"objects/{spec.object_id}.json",
                    "stl_path": f"meshes/{spec.object_id}.stl",
                    "mask_dir": f"masks/{spec.object_id}",
                }
            )

    write_records_csv(records, out / "occlusion.csv")

    manifest = {
        "tool": "blockworld",
        "version": __version__,
        "config": {
            "seed": config.seed,
            "family": config.family,
            "views": config.views,
            "radius_factor": config.radius_factor,
            "max_edge": config.max_edge,
            "resolution": config.resolution,
            "vfov_fill": VFOV_FILL,
            "vfov_degrees": vfov,
        },
        "objects": manifest_objects,
        "annotation_rows": len(specs) * config.views,
        "annotations_path": "annotations.jsonl",
        "occlusion_path": "occlusion.csv",
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path


def _read_manifest(dataset_dir: Path) -> dict:
    path = Path(dataset_dir) / "manifest.json"
    if not path.is_file():
        raise FileNotFoundError(f"no manifest.json under {dataset_dir}")
    return json.loads(path.read_text())


def _read_occlusion_csv(path: Path) -> list[OcclusionRecord]:
    import csv as _csv

    records = []
    with open(path, newline="") as fh:
        reader = _csv.DictReader(fh)
        for row in reader:
            records.append(
                OcclusionRecord(
                    row["object_id"],
                    int(row["view_index"]),
                    float(row["so"]),
                    int(row["tile"]),
                    np.zeros(3),
                )
            )
    return records


def dataset_stats(dataset_dir, out_dir=None) -> dict:
    """Per-class table, per-tile table, and the 5-point histogram as CSVs."""
    dataset_dir = Path(dataset_dir)
    manifest = _read_manifest(dataset_dir)
    records = _read_occlusion_csv(dataset_dir / manifest["occlusion_path"])
    if not records:
        raise ValueError(f"{dataset_dir}: occlusion table is empty")
    classes = {obj["id"]: obj["class"] for obj in manifest["objects"]}
    summary = summarize(records, classes)

    out = Path(out_dir) if out_dir else dataset_dir / "stats"
    out.mkdir(parents=True, exist_ok=True)
    write_summary_csv(summary.per_class, out / "per_class.csv", "class")
    write_summary_csv(summary.per_tile, out / "per_tile.csv", "tile")

    from .occlusion import HIST_LABELS, hist_label

    hist = {label: 0 for label in HIST_LABELS}
    for rec in records:
        hist[hist_label(rec.so)] += 1
    with open(out / "histogram.csv", "w") as fh:
        fh.write("bin,count\n")
        for label in HIST_LABELS:
            fh.write(f"{label},{hist[label]}\n")

    return {
        "per_class": out / "per_class.csv",
        "per_tile": out / "per_tile.csv",
        "histogram": out / "histogram.csv",
        "summary": summary,
    }


def validate_dataset(dataset_dir) -> list[str]:
    """Re-check manifest counts and row invariants; empty list means ok."""
    dataset_dir = Path(dataset_dir)
    problems: list[str] = []
    try:
        manifest = _read_manifest(dataset_dir)
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        return [f"manifest: {exc}"]

    views = manifest["config"]["views"]
    resolution = manifest["config"]["resolution"]
    objects = manifest["objects"]
    expected_rows = len(objects) * views
    if manifest["annotation_rows"] != expected_rows:
        problems.append(
            f"manifest: annotation_rows {manifest['annotation_rows']} != objects x views {expected_rows}"
        )

    for obj in objects:
        stl = dataset_dir / obj["stl_path"]
        try:
            read_stl(stl)
        except (OSError, ValueError) as exc:
            problems.append(f"stl {obj['stl_path']}: {exc}")
        if not (dataset_dir / obj["spec_path"]).is_file():
            problems.append(f"spec file missing: {obj['spec_path']}")

    so_by_key: dict[tuple[str, int], float] = {}
    try:
        for rec in _read_occlusion_csv(dataset_dir / manifest["occlusion_path"]):
            so_by_key[(rec.object_id, rec.view_index)] = rec.so
    except (OSError, ValueError, KeyError) as exc:
        problems.append(f"occlusion.csv: {exc}")
    if len(so_by_key) != expected_rows and not any(p.startswith("occlusion.csv") for p in problems):
        problems.append(f"occlusion.csv: {len(so_by_key)} rows, expected {expected_rows}")

    ann_path = dataset_dir / manifest["annotations_path"]
    rows = 0
    try:
        with open(ann_path) as fh:
            for line_no, line in enumerate(fh, start=1):
                rows += 1
                row = json.loads(line)
                where = f"annotations.jsonl:{line_no}"
                so = row["so"]
                if not (0.0 <= so <= 1.0):
                    problems.append(f"{where}: so {so} outside [0, 1]")
                if row["bbox"] is not None:
                    x0, y0, x1, y1 = row["bbox"]
                    if not (0 <= x0 <= x1 < resolution and 0 <= y0 <= y1 < resolution):
                        problems.append(f"{where}: bbox {row['bbox']} outside {resolution}x{resolution}")
                if row["view_id"] >= views or row["view_id"] < 0:
                    problems.append(f"{where}: view_id {row['view_id']} outside 0..{views - 1}")
                if map_to_tile(np.asarray(row["camera_position"])) != row["tile"]:
                    problems.append(f"{where}: tile {row['tile']} does not match camera position")
                key = (row["object_id"], row["view_id"])
                if key in so_by_key and so_by_key[key] != so:
                    problems.append(f"{where}: so differs from occlusion.csv entry")
                mask_path = dataset_dir / "masks" / row["object_id"] / f"{row['view_id']:04d}.pgm"
                if not mask_path.is_file():
                    problems.append(f"{where}: mask file missing")
    except OSError as exc:
        problems.append(f"annotations: {exc}")
    if rows != expected_rows:
        problems.append(f"annotations.jsonl: {rows} rows, expected {expected_rows}")
    return problems
