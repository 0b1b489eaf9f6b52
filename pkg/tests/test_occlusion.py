import numpy as np
import pytest

from blockworld.geometry import TriMesh, cuboid_mesh, surface_area
from blockworld.objects import assemble_mesh
from blockworld.occlusion import (
    HIST_LABELS,
    OcclusionRecord,
    bounding_sphere,
    hist_label,
    occlusion_table,
    self_occlusion,
    summarize,
    visible_partition,
    write_records_csv,
)
from blockworld.viewsphere import fibonacci_lattice, look_at

from shapes import brute_force_so, icosphere, mirrored_pair, spherical_cap_so, symmetric_hull


def test_sphere_matches_spherical_cap_form():
    mesh = icosphere(4, 0.5)
    camera = look_at((0, 0, 2.0), (0, 0, 0))
    so = self_occlusion(mesh, camera, 0.5 / 20)
    assert so == pytest.approx(spherical_cap_so(0.5, 2.0), abs=0.01)


def test_cube_face_on_shows_one_face():
    cube = cuboid_mesh((20, 20, 20))
    camera = look_at((0, 0, 60.0), (0, 0, 0))
    part = visible_partition(cube, camera, 1.0)
    assert part.visible_area == pytest.approx(400.0, rel=1e-9)
    assert self_occlusion(cube, camera, 1.0) == pytest.approx(5.0 / 6.0, abs=1e-9)


def test_partition_conserves_area():
    cube = cuboid_mesh((20, 20, 20))
    camera = look_at((35, 20, 50.0), (0, 0, 0))
    part = visible_partition(cube, camera, 2.0)
    total = surface_area(cube)
    assert abs(part.visible_area + part.hidden_area - total) <= 1e-6 * total


def test_partition_submeshes_partition_faces():
    cube = cuboid_mesh((4, 4, 4))
    camera = look_at((9, 5, 7.0), (0, 0, 0))
    part = visible_partition(cube, camera, 1.0)
    total_faces = part.visible.num_faces + part.hidden.num_faces
    sub_total = visible_partition(cube, camera, 1.0)
    assert total_faces == sub_total.visible.num_faces + sub_total.hidden.num_faces
    assert part.visible_area > 0 and part.hidden_area > 0


def test_camera_inside_rejected():
    cube = cuboid_mesh((10, 10, 10))
    with pytest.raises(ValueError, match="outside"):
        self_occlusion(cube, look_at((1, 1, 1), (50, 0, 0)), 2.0)


def test_open_mesh_rejected():
    cube = cuboid_mesh((10, 10, 10))
    open_mesh = TriMesh.build(cube.vertices, cube.faces[:-1])
    with pytest.raises(ValueError, match="closed"):
        self_occlusion(open_mesh, look_at((0, 0, 30), (0, 0, 0)), 2.0)


def test_zero_area_mesh_rejected():
    with pytest.raises(ValueError):
        self_occlusion(TriMesh.empty(), look_at((0, 0, 3), (0, 0, 0)), 1.0)


def test_convex_bodies_hide_at_least_half(rng):
    for _ in range(8):
        mesh = symmetric_hull(rng)
        _, radius = bounding_sphere(mesh)
        center = mesh.aabb().center
        for _ in range(5):
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            camera = look_at(center + d * rng.uniform(1.3, 4.0) * radius, center)
            assert self_occlusion(mesh, camera, 0.5) >= 0.5 - 1e-9


def test_matches_brute_force_oracle(l1_specs):
    cases = [
        (cuboid_mesh((20, 20, 20)), (33, 21, 55.0), 5.0),
        (assemble_mesh(l1_specs[0]), (300.0, 210.0, -180.0), 12.0),
    ]
    for mesh, cam_pos, max_edge in cases:
        camera = look_at(cam_pos, mesh.aabb().center)
        kernel = self_occlusion(mesh, camera, max_edge)
        brute = brute_force_so(mesh, np.asarray(cam_pos, dtype=float), max_edge)
        assert kernel == pytest.approx(brute, abs=1e-9)


def test_scale_invariance():
    mesh = cuboid_mesh((20, 20, 60))
    cam_pos = np.array([70.0, 55.0, 90.0])
    base = self_occlusion(mesh, look_at(cam_pos, (0, 0, 0)), 4.0)
    for s in (0.25, 3.0, 1000.0):
        scaled = TriMesh.build(mesh.vertices * s, mesh.faces)
        so = self_occlusion(scaled, look_at(cam_pos * s, (0, 0, 0)), 4.0 * s)
        assert so == pytest.approx(base, rel=1e-9)


def test_mirror_symmetric_views_agree(l1_specs):
    # A shape with an exact triangulation-level mirror plane: an assembly
    # next to its x-reflection.
    half = assemble_mesh(l1_specs[2])
    shifted = TriMesh.build(half.vertices + np.array([150.0, 0.0, 0.0]), half.faces)
    twin = mirrored_pair(shifted, plane_x=0.0)
    center = twin.aabb().center
    np.testing.assert_allclose(center[0], 0.0, atol=1e-9)
    _, radius = bounding_sphere(twin)
    cam = np.array([0.9, 0.4, 0.6])
    cam = cam / np.linalg.norm(cam) * 2 * radius
    mirror_cam = cam * np.array([-1.0, 1.0, 1.0])
    so_a = self_occlusion(twin, look_at(center + cam, center), 6.0)
    so_b = self_occlusion(twin, look_at(center + mirror_cam, center), 6.0)
    assert so_a == pytest.approx(so_b, abs=1e-6)


def test_refinement_deltas_shrink_on_nonconvex(l1_specs):
    mesh = assemble_mesh(l1_specs[4])
    center, radius = bounding_sphere(mesh)
    d = np.array([1.3, 0.8, 1.1])
    camera = look_at(center + d / np.linalg.norm(d) * 2 * radius, center)
    so = {e: self_occlusion(mesh, camera, e) for e in (8.0, 4.0, 2.0, 1.0)}
    d1 = abs(so[8.0] - so[4.0])
    d2 = abs(so[4.0] - so[2.0])
    d3 = abs(so[2.0] - so[1.0])
    assert d1 > d2 > d3


def test_occlusion_table_shape_and_order(l2_specs):
    specs = l2_specs[:2]
    lattice = fibonacci_lattice(5, 2.0)
    records = occlusion_table(specs, lattice, 8.0)
    assert len(records) == 10
    assert [r.object_id for r in records[:5]] == [specs[0].object_id] * 5
    assert [r.view_index for r in records[:5]] == [0, 1, 2, 3, 4]
    for r in records:
        assert 0.0 <= r.so <= 1.0
        assert 1 <= r.tile <= 8


def test_occlusion_table_single_view_matches_direct(l2_specs):
    spec = l2_specs[0]
    lattice = fibonacci_lattice(1, 2.0)
    (record,) = occlusion_table([spec], lattice, 6.0)
    mesh = assemble_mesh(spec)
    center, radius = bounding_sphere(mesh)
    centered = TriMesh.build(mesh.vertices - center, mesh.faces)
    camera = look_at(lattice[0].position * radius, (0, 0, 0))
    assert record.so == pytest.approx(self_occlusion(centered, camera, 6.0), abs=1e-12)


def test_bare_base_is_never_mostly_visible():
    from blockworld.objects import AssemblyNode, ElementKind, ObjectSpec

    bare = ObjectSpec("bare", "L1", "bare", 0, (AssemblyNode(ElementKind.BASE, np.eye(4), None, None),))
    records = occlusion_table([bare], fibonacci_lattice(64, 2.0), 6.0)
    assert all(r.so >= 0.5 - 1e-9 for r in records)


def test_hist_labels_cover_unit_interval():
    assert hist_label(0.2) == "<50"
    assert hist_label(0.50) == "50-55"
    assert hist_label(0.649999) == "60-65"
    assert hist_label(0.65) == "65-70"
    assert hist_label(0.849) == "80-85"
    assert hist_label(0.86) == ">85"
    assert len(HIST_LABELS) == 9


def test_summarize_single_record():
    rec = OcclusionRecord("obj", 0, 0.7, 3, np.zeros(3))
    summary = summarize([rec])
    (row,) = summary.per_class
    assert (row.mean, row.min, row.max, row.count) == (0.7, 0.7, 0.7, 1)
    assert sum(row.histogram.values()) == 1
    (tile,) = summary.per_tile
    assert tile.key == "3"


def test_summarize_groups_by_class_map():
    recs = [
        OcclusionRecord("a1", 0, 0.6, 1, np.zeros(3)),
        OcclusionRecord("a2", 0, 0.8, 2, np.zeros(3)),
    ]
    summary = summarize(recs, classes={"a1": "g", "a2": "g"})
    (row,) = summary.per_class
    assert row.count == 2
    assert row.mean == pytest.approx(0.7)


def test_summarize_rejects_empty():
    with pytest.raises(ValueError):
        summarize([])


def test_records_csv_round_trip(tmp_path):
    recs = [
        OcclusionRecord("a", 0, 0.62, 1, np.zeros(3)),
        OcclusionRecord("a", 1, 0.75, 5, np.zeros(3)),
    ]
    path = tmp_path / "r.csv"
    write_records_csv(recs, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "object_id,view_index,tile,so"
    assert lines[1] == "a,0,1,0.62"
    assert len(lines) == 3
