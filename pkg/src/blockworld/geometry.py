"""Triangle meshes: construction, area, subdivision, boundary union, binary STL I/O.

All lengths are millimetres. Meshes are immutable value objects: float64
vertices, int64 face index triples, and one outward unit normal per face.
Closed meshes built here have positive divergence-theorem volume.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
import struct

import numpy as np


class InvalidAssemblyError(ValueError):
    """Parts overlap with positive volume instead of meeting on contact patches."""


class StlParseError(ValueError):
    """Malformed binary STL; carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box, min <= max componentwise."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "min", np.asarray(self.min, dtype=np.float64))
        object.__setattr__(self, "max", np.asarray(self.max, dtype=np.float64))
        if not np.all(self.min <= self.max):
            raise ValueError("Aabb requires min <= max componentwise")

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min + self.max)

    @property
    def extents(self) -> np.ndarray:
        return self.max - self.min

    def distance_to(self, other: "Aabb") -> float:
        """Euclidean separation between two boxes; 0 if they touch or overlap."""
        gap = np.maximum(self.min - other.max, other.min - self.max)
        gap = np.maximum(gap, 0.0)
        return float(np.sqrt(np.sum(gap * gap)))

    def overlap_extents(self, other: "Aabb") -> np.ndarray:
        """Signed per-axis overlap; negative where the boxes are separated."""
        return np.minimum(self.max, other.max) - np.maximum(self.min, other.min)


@dataclass(frozen=True)
class TriMesh:
    """Indexed triangle mesh with one outward unit normal per face."""

    vertices: np.ndarray  # (n, 3) float64
    faces: np.ndarray     # (m, 3) int64
    normals: np.ndarray   # (m, 3) float64, unit length

    @staticmethod
    def build(vertices, faces) -> "TriMesh":
        """Build a mesh from vertex and face arrays, computing normals from winding.

        Raises ValueError on non-finite vertices, out-of-range indices, or
        degenerate (zero area) faces.
        """
        v = np.ascontiguousarray(np.asarray(vertices, dtype=np.float64).reshape(-1, 3))
        f = np.ascontiguousarray(np.asarray(faces, dtype=np.int64).reshape(-1, 3))
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        if f.size:
            tri = v[f]
            cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
            norm = np.linalg.norm(cross, axis=1)
            if np.any(norm <= 0.0):
                bad = int(np.argmin(norm))
                raise ValueError(f"degenerate face {bad} has zero area")
            normals = cross / norm[:, None]
        else:
            normals = np.zeros((0, 3), dtype=np.float64)
        mesh = TriMesh(v, f, np.ascontiguousarray(normals))
        for arr in (mesh.vertices, mesh.faces, mesh.normals):
            arr.setflags(write=False)
        return mesh

    @staticmethod
    def empty() -> "TriMesh":
        return TriMesh.build(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    @property
    def num_faces(self) -> int:
        return len(self.faces)

    def corners(self) -> np.ndarray:
        """(m, 3, 3) array of face corner coordinates."""
        return self.vertices[self.faces]

    def centroids(self) -> np.ndarray:
        return self.corners().mean(axis=1)

    def aabb(self) -> Aabb:
        if len(self.vertices) == 0:
            z = np.zeros(3)
            return Aabb(z, z)
        used = self.faces.reshape(-1) if len(self.faces) else np.arange(len(self.vertices))
        pts = self.vertices[np.unique(used)]
        return Aabb(pts.min(axis=0), pts.max(axis=0))


def triangle_areas(mesh: TriMesh) -> np.ndarray:
    if mesh.num_faces == 0:
        return np.zeros(0, dtype=np.float64)
    tri = mesh.corners()
    cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def surface_area(mesh: TriMesh) -> float:
    """Sum of triangle areas in mm^2."""
    return float(triangle_areas(mesh).sum())


def signed_volume(mesh: TriMesh) -> float:
    """Divergence-theorem volume; positive for closed, outward-oriented meshes."""
    if mesh.num_faces == 0:
        return 0.0
    tri = mesh.corners()
    return float(np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2])).sum() / 6.0)


def make_pose(rotation=None, translation=None) -> np.ndarray:
    """4x4 rigid transform from a 3x3 rotation and a translation vector."""
    pose = np.eye(4, dtype=np.float64)
    if rotation is not None:
        pose[:3, :3] = np.asarray(rotation, dtype=np.float64)
    if translation is not None:
        pose[:3, 3] = np.asarray(translation, dtype=np.float64)
    return pose


def apply_pose(pose: np.ndarray, points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    return pts @ pose[:3, :3].T + pose[:3, 3]


def transform_mesh(mesh: TriMesh, pose: np.ndarray) -> TriMesh:
    return TriMesh.build(apply_pose(pose, mesh.vertices), mesh.faces)


def translate_mesh(mesh: TriMesh, offset) -> TriMesh:
    off = np.asarray(offset, dtype=np.float64)
    return TriMesh.build(mesh.vertices + off, mesh.faces)


# Unit cube faces, two CCW triangles per side, outward normals.
_CUBE_VERTS = np.array(
    [[x, y, z] for x in (-0.5, 0.5) for y in (-0.5, 0.5) for z in (-0.5, 0.5)],
    dtype=np.float64,
)
_CUBE_FACES = np.array(
    [
        [0, 1, 3], [0, 3, 2],  # -x
        [4, 6, 7], [4, 7, 5],  # +x
        [0, 4, 5], [0, 5, 1],  # -y
        [2, 3, 7], [2, 7, 6],  # +y
        [0, 2, 6], [0, 6, 4],  # -z
        [1, 5, 7], [1, 7, 3],  # +z
    ],
    dtype=np.int64,
)


def cuboid_mesh(dimensions, pose: np.ndarray | None = None) -> TriMesh:
    """Closed 12-triangle cuboid centered at the local origin, then posed.

    dimensions are the (dx, dy, dz) edge lengths in mm; all must be positive.
    """
    dims = np.asarray(dimensions, dtype=np.float64)
    if dims.shape != (3,) or np.any(dims <= 0.0) or not np.all(np.isfinite(dims)):
        raise ValueError(f"cuboid dimensions must be three positive lengths, got {dimensions}")
    verts = _CUBE_VERTS * dims
    if pose is not None:
        verts = apply_pose(pose, verts)
    return TriMesh.build(verts, _CUBE_FACES)


def subdivide(mesh: TriMesh, max_edge: float) -> TriMesh:
    """Bisect longest edges until every edge length is <= max_edge.

    Each output triangle lies inside exactly one input triangle and inherits
    its normal, so total area and orientation are preserved.
    """
    if not (max_edge > 0.0):
        raise ValueError(f"max_edge must be positive, got {max_edge}")
    if mesh.num_faces == 0:
        return mesh

    tri = mesh.corners()
    normals = mesh.normals
    limit_sq = max_edge * max_edge
    done: list[np.ndarray] = []
    done_normals: list[np.ndarray] = []

    while len(tri):
        edges = np.stack(
            [tri[:, 2] - tri[:, 1], tri[:, 0] - tri[:, 2], tri[:, 1] - tri[:, 0]],
            axis=1,
        )
        len_sq = np.einsum("ijk,ijk->ij", edges, edges)
        longest = np.argmax(len_sq, axis=1)
        needs_split = np.max(len_sq, axis=1) > limit_sq

        if not np.any(needs_split):
            if not done:
                return mesh  # already fine, keep the input object
            done.append(tri)
            done_normals.append(normals)
            break

        done.append(tri[~needs_split])
        done_normals.append(normals[~needs_split])

        t = tri[needs_split]
        n = normals[needs_split]
        e = longest[needs_split]
        # Roll corners so the edge to split is (corner1, corner2).
        order = (np.arange(3)[None, :] + e[:, None]) % 3
        t = np.take_along_axis(t, order[:, :, None], axis=1)
        mid = 0.5 * (t[:, 1] + t[:, 2])
        left = np.stack([t[:, 0], t[:, 1], mid], axis=1)
        right = np.stack([t[:, 0], mid, t[:, 2]], axis=1)
        tri = np.concatenate([left, right], axis=0)
        normals = np.concatenate([n, n], axis=0)

    return _mesh_from_soup(np.concatenate(done, axis=0), np.concatenate(done_normals, axis=0))


def _mesh_from_soup(corners: np.ndarray, normals: np.ndarray | None = None) -> TriMesh:
    """Index a triangle soup by welding exactly-equal vertices.

    Exact comparison keeps areas bit-identical to the soup; shared-edge
    midpoints weld because both sides compute the same floats.
    """
    if len(corners) == 0:
        return TriMesh.empty()
    pts = corners.reshape(-1, 3) + 0.0  # normalize -0.0 so it welds with +0.0
    verts, inverse = np.unique(pts, axis=0, return_inverse=True)
    faces = inverse.reshape(-1, 3)
    mesh = TriMesh.build(verts, faces)
    if normals is not None:
        # Keep parent-plane normals rather than recomputing per sub-triangle.
        n = np.ascontiguousarray(np.asarray(normals, dtype=np.float64))
        n.setflags(write=False)
        object.__setattr__(mesh, "normals", n)
    return mesh


def _clip_polygon(poly: list[np.ndarray], axis: int, value: float, keep_less: bool, tol: float):
    """Split a convex 2D polygon by the line coord[axis] == value.

    Returns (kept, other) pieces as vertex lists; either may be empty.
    Points within tol of the line belong to both pieces.
    """
    kept: list[np.ndarray] = []
    other: list[np.ndarray] = []
    m = len(poly)
    for i in range(m):
        a, b = poly[i], poly[(i + 1) % m]
        da = a[axis] - value
        db = b[axis] - value
        if not keep_less:
            da, db = -da, -db
        a_in = da <= tol
        a_out = da >= -tol
        if a_in:
            kept.append(a)
        if a_out:
            other.append(a)
        if (da < -tol and db > tol) or (da > tol and db < -tol):
            t = da / (da - db)
            p = a + t * (b - a)
            p[axis] = value  # exact on the cut line
            kept.append(p)
            other.append(p)
    return kept, other


def _polygon_area(poly: list[np.ndarray]) -> float:
    if len(poly) < 3:
        return 0.0
    arr = np.asarray(poly)
    x, y = arr[:, 0], arr[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _subtract_rect(tri2d: np.ndarray, rect, tol: float) -> list[list[np.ndarray]]:
    """Subtract an axis-aligned rectangle from a 2D triangle.

    rect is (u0, v0, u1, v1). Returns convex pieces covering triangle minus
    rectangle; winding of the input is preserved.
    """
    u0, v0, u1, v1 = rect
    cuts = [(0, u0, True), (0, u1, False), (1, v0, True), (1, v1, False)]
    pieces: list[list[np.ndarray]] = []
    inside = [p for p in tri2d]
    area_tol = max(tol * tol, 1e-12)
    for axis, value, keep_less in cuts:
        outside, inside = _clip_polygon(inside, axis, value, keep_less, tol)
        if _polygon_area(outside) > area_tol:
            pieces.append(outside)
        if not inside:
            break
    # Whatever remains in `inside` is covered by the rectangle and is dropped.
    return pieces


_AXIS_UV = {0: (1, 2), 1: (2, 0), 2: (0, 1)}  # in-plane axes per plane normal axis


def _clip_plane_faces(corners, normals, axis, coord, normal_sign, rect, tol):
    """Remove a rectangular region from all faces lying in a given axis plane."""
    plane_n = np.zeros(3)
    plane_n[axis] = normal_sign
    on_plane = (
        (np.abs(corners[:, :, axis] - coord) <= tol).all(axis=1)
        & (np.einsum("ij,j->i", normals, plane_n) > 0.999999)
    )
    if not np.any(on_plane):
        return corners, normals
    ua, va = _AXIS_UV[axis]
    area_tol = max(tol * tol, 1e-12)
    keep_c = [corners[~on_plane]]
    keep_n = [normals[~on_plane]]
    for t3d, n in zip(corners[on_plane], normals[on_plane]):
        tri2d = t3d[:, (ua, va)]
        for piece in _subtract_rect(tri2d, rect, tol):
            # Fan-triangulate each convex piece and lift back onto the plane.
            for k in range(1, len(piece) - 1):
                fan = np.asarray([piece[0], piece[k], piece[k + 1]])
                if _polygon_area([fan[0], fan[1], fan[2]]) <= area_tol:
                    continue
                lifted = np.empty((3, 3))
                lifted[:, ua] = fan[:, 0]
                lifted[:, va] = fan[:, 1]
                lifted[:, axis] = coord
                keep_c.append(lifted[None, :, :])
                keep_n.append(n[None, :])
    return np.concatenate(keep_c, axis=0), np.concatenate(keep_n, axis=0)


def union_boundary(parts: list[TriMesh], contact_tolerance: float = 1e-6) -> TriMesh:
    """Exterior boundary of an assembly of closed parts.

    Parts may touch only on planar axis-aligned contact patches. Coincident,
    opposite-facing face regions are removed from both parts; everything else
    is kept. Raises InvalidAssemblyError if two parts overlap with positive
    volume beyond the tolerance.
    """
    if len(parts) == 0:
        return TriMesh.empty()
    if len(parts) == 1:
        return parts[0]
    tol = contact_tolerance
    boxes = [p.aabb() for p in parts]
    soup = [(np.array(p.corners()), np.array(p.normals)) for p in parts]

    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            over = boxes[i].overlap_extents(boxes[j])
            if np.all(over > tol):
                raise InvalidAssemblyError(
                    f"parts {i} and {j} interpenetrate (overlap extents {over})"
                )
            planar = np.abs(over) <= tol
            if planar.sum() != 1 or np.any(over < -tol):
                continue  # disjoint, or touching only on an edge/corner
            axis = int(np.argmax(planar))
            lo = np.maximum(boxes[i].min, boxes[j].min)
            hi = np.minimum(boxes[i].max, boxes[j].max)
            coord = 0.5 * (lo[axis] + hi[axis])
            ua, va = _AXIS_UV[axis]
            rect = (lo[ua], lo[va], hi[ua], hi[va])
            if (rect[2] - rect[0]) <= tol or (rect[3] - rect[1]) <= tol:
                continue
            # Part on the low side faces +axis, the other faces -axis.
            i_low = abs(boxes[i].max[axis] - coord) <= tol
            sign_i = 1.0 if i_low else -1.0
            soup[i] = _clip_plane_faces(*soup[i], axis, coord, sign_i, rect, tol)
            soup[j] = _clip_plane_faces(*soup[j], axis, coord, -sign_i, rect, tol)

    corners = np.concatenate([c for c, _ in soup], axis=0)
    normals = np.concatenate([n for _, n in soup], axis=0)
    return _mesh_from_soup(corners, normals)


def boundary_edge_excess(mesh: TriMesh) -> float:
    """Total length of face edges not cancelled by an opposite-facing twin.

    Zero for watertight meshes, including ones with T-junctions where one
    long edge is matched by several collinear shorter edges.
    """
    if mesh.num_faces == 0:
        return 0.0
    f = mesh.faces
    edges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=0)
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    sign = np.where(edges[:, 0] == lo, 1, -1)
    key = lo * len(mesh.vertices) + hi
    order = np.argsort(key, kind="stable")
    key, sign, edges = key[order], sign[order], edges[order]
    # Net multiplicity per undirected edge; paired half-edges cancel.
    uniq, start = np.unique(key, return_index=True)
    net = np.add.reduceat(sign, start)
    unmatched = uniq[net != 0]
    if len(unmatched) == 0:
        return 0.0
    # Remaining edges may still cancel against collinear runs (T-junctions):
    # accumulate signed coverage per supporting line.
    excess = 0.0
    intervals: dict[tuple, list[tuple[float, float, int]]] = {}
    counts = dict(zip(uniq.tolist(), net.tolist()))
    verts = mesh.vertices
    for k in unmatched.tolist():
        a_idx, b_idx = divmod(k, len(verts))
        a, b = verts[a_idx], verts[b_idx]
        d = b - a
        length = np.linalg.norm(d)
        if length == 0.0:
            continue
        u = d / length
        if u[np.argmax(np.abs(u))] < 0:
            u = -u
        anchor = a - np.dot(a, u) * u
        key2 = tuple(np.round(u, 9)) + tuple(np.round(anchor, 6))
        t0, t1 = np.dot(a, u), np.dot(b, u)
        intervals.setdefault(key2, []).append((min(t0, t1), max(t0, t1), counts[k] * (1 if t1 > t0 else -1)))
    for spans in intervals.values():
        stops = sorted({t for s in spans for t in s[:2]})
        for s0, s1 in zip(stops[:-1], stops[1:]):
            cov = sum(c for a0, a1, c in spans if a0 <= s0 + 1e-9 and a1 >= s1 - 1e-9)
            if cov != 0:
                excess += abs(cov) * (s1 - s0)
    return excess


def is_closed(mesh: TriMesh, tol: float = 1e-6) -> bool:
    return mesh.num_faces > 0 and boundary_edge_excess(mesh) <= tol


_STL_HEADER = b"blockworld binary stl".ljust(80, b"\0")


def write_stl(mesh: TriMesh, path) -> None:
    """Write binary little-endian STL: 80-byte header, uint32 count, 50 bytes per triangle."""
    tri = mesh.corners().astype("<f4")
    nrm = mesh.normals.astype("<f4")
    count = mesh.num_faces
    record = np.zeros(count, dtype=np.dtype([("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")]))
    if count:
        record["n"] = nrm
        record["v"] = tri
    with open(path, "wb") as fh:
        fh.write(_STL_HEADER)
        fh.write(struct.pack("<I", count))
        fh.write(record.tobytes())


def read_stl(path) -> TriMesh:
    """Read binary STL written by write_stl (or any well-formed binary STL)."""
    data = Path(path).read_bytes()
    if len(data) < 84:
        raise StlParseError("file too short for binary STL header", len(data))
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * count
    if len(data) != expected:
        raise StlParseError(
            f"triangle count {count} implies {expected} bytes, file has {len(data)}",
            min(len(data), expected),
        )
    if count == 0:
        return TriMesh.empty()
    record = np.frombuffer(data, dtype=np.dtype([("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")]), count=count, offset=84)
    corners = record["v"].astype(np.float64)
    return _mesh_from_soup(corners)
