"""Ray/mesh intersection on a bounding-volume hierarchy.

The BVH is built once per mesh (numpy, median split on the widest centroid
axis) and queried by numba kernels. Queries are batched: one any-hit test per
ray, used both for occlusion tests between a camera and face centroids and
for primary rays when rasterizing masks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

_LEAF_SIZE = 4
_STACK_DEPTH = 64


@dataclass(frozen=True)
class Bvh:
    node_min: np.ndarray    # (k, 3)
    node_max: np.ndarray    # (k, 3)
    node_left: np.ndarray   # (k,) child index, or -1 for leaves
    node_right: np.ndarray  # (k,)
    node_start: np.ndarray  # (k,) into perm for leaves
    node_count: np.ndarray  # (k,) triangles in leaf, 0 for internal
    perm: np.ndarray        # (m,) triangle order
    v0: np.ndarray          # (m, 3) triangle base corner
    e1: np.ndarray          # (m, 3) corner1 - corner0
    e2: np.ndarray          # (m, 3) corner2 - corner0

    @staticmethod
    def build(corners: np.ndarray) -> "Bvh":
        """Build from an (m, 3, 3) triangle corner array."""
        tri = np.ascontiguousarray(corners, dtype=np.float64)
        m = len(tri)
        if m == 0:
            raise ValueError("cannot build a BVH over zero triangles")
        tri_min = tri.min(axis=1)
        tri_max = tri.max(axis=1)
        centers = 0.5 * (tri_min + tri_max)

        node_min, node_max = [], []
        node_left, node_right = [], []
        node_start, node_count = [], []
        perm = np.empty(m, dtype=np.int64)
        cursor = 0

        stack = [(np.arange(m), -1, False)]  # (indices, parent, is_right)
        while stack:
            idx, parent, is_right = stack.pop()
            node_id = len(node_min)
            if parent >= 0:
                (node_right if is_right else node_left)[parent] = node_id
            lo = tri_min[idx].min(axis=0)
            hi = tri_max[idx].max(axis=0)
            node_min.append(lo)
            node_max.append(hi)
            node_left.append(-1)
            node_right.append(-1)
            if len(idx) <= _LEAF_SIZE:
                node_start.append(cursor)
                node_count.append(len(idx))
                perm[cursor : cursor + len(idx)] = idx
                cursor += len(idx)
                continue
            node_start.append(0)
            node_count.append(0)
            c = centers[idx]
            axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
            half = len(idx) // 2
            order = np.argpartition(c[:, axis], half)
            # Push right first so the left child is processed (and numbered) next.
            stack.append((idx[order[half:]], node_id, True))
            stack.append((idx[order[:half]], node_id, False))

        b = Bvh(
            np.ascontiguousarray(node_min, dtype=np.float64),
            np.ascontiguousarray(node_max, dtype=np.float64),
            np.asarray(node_left, dtype=np.int64),
            np.asarray(node_right, dtype=np.int64),
            np.asarray(node_start, dtype=np.int64),
            np.asarray(node_count, dtype=np.int64),
            perm,
            np.ascontiguousarray(tri[:, 0]),
            np.ascontiguousarray(tri[:, 1] - tri[:, 0]),
            np.ascontiguousarray(tri[:, 2] - tri[:, 0]),
        )
        return b

    def any_hit(self, origins, dirs, tmin, tmax, skip) -> np.ndarray:
        """Whether each ray hits any triangle (except its skip index) in (tmin, tmax).

        origins may be a single (3,) point shared by all rays or an (n, 3) array.
        t is measured in units of the (unnormalized) direction vector.
        """
        dirs = np.ascontiguousarray(dirs, dtype=np.float64)
        n = len(dirs)
        origins = np.ascontiguousarray(origins, dtype=np.float64)
        if origins.ndim == 1:
            origins = np.broadcast_to(origins, (n, 3))
            origins = np.ascontiguousarray(origins)
        tmin = np.ascontiguousarray(np.broadcast_to(np.asarray(tmin, dtype=np.float64), (n,)))
        tmax = np.ascontiguousarray(np.broadcast_to(np.asarray(tmax, dtype=np.float64), (n,)))
        skip = np.ascontiguousarray(np.broadcast_to(np.asarray(skip, dtype=np.int64), (n,)))
        return _any_hit_batch(
            origins, dirs, tmin, tmax, skip,
            self.node_min, self.node_max, self.node_left, self.node_right,
            self.node_start, self.node_count, self.perm, self.v0, self.e1, self.e2,
        ).astype(bool)

    def count_hits(self, origin, direction) -> int:
        """Number of triangles a single ray crosses; used for inside/outside parity."""
        origin = np.ascontiguousarray(origin, dtype=np.float64)
        direction = np.ascontiguousarray(direction, dtype=np.float64)
        return int(
            _count_hits(
                origin, direction,
                self.node_min, self.node_max, self.node_left, self.node_right,
                self.node_start, self.node_count, self.perm, self.v0, self.e1, self.e2,
            )
        )


@njit(cache=True, inline="always", error_model="numpy")
def _slab_test(lo, hi, ox, oy, oz, dx, dy, dz, tmax):
    tn = 0.0
    tf = tmax
    if dx != 0.0:
        ix = 1.0 / dx
        t0 = (lo[0] - ox) * ix
        t1 = (hi[0] - ox) * ix
        tn = max(tn, min(t0, t1))
        tf = min(tf, max(t0, t1))
    elif ox < lo[0] or ox > hi[0]:
        return False
    if dy != 0.0:
        iy = 1.0 / dy
        t0 = (lo[1] - oy) * iy
        t1 = (hi[1] - oy) * iy
        tn = max(tn, min(t0, t1))
        tf = min(tf, max(t0, t1))
    elif oy < lo[1] or oy > hi[1]:
        return False
    if dz != 0.0:
        iz = 1.0 / dz
        t0 = (lo[2] - oz) * iz
        t1 = (hi[2] - oz) * iz
        tn = max(tn, min(t0, t1))
        tf = min(tf, max(t0, t1))
    elif oz < lo[2] or oz > hi[2]:
        return False
    return tn <= tf


@njit(cache=True, inline="always", error_model="numpy")
def _tri_hit_t(j, ox, oy, oz, dx, dy, dz, v0, e1, e2):
    """Moller-Trumbore; returns the ray parameter t, or -1.0 on miss."""
    e1x, e1y, e1z = e1[j, 0], e1[j, 1], e1[j, 2]
    e2x, e2y, e2z = e2[j, 0], e2[j, 1], e2[j, 2]
    px = dy * e2z - dz * e2y
    py = dz * e2x - dx * e2z
    pz = dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    if -1e-12 < det < 1e-12:
        return -1.0
    inv = 1.0 / det
    sx = ox - v0[j, 0]
    sy = oy - v0[j, 1]
    sz = oz - v0[j, 2]
    u = (sx * px + sy * py + sz * pz) * inv
    if u < 0.0 or u > 1.0:
        return -1.0
    qx = sy * e1z - sz * e1y
    qy = sz * e1x - sx * e1z
    qz = sx * e1y - sy * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return -1.0
    return (e2x * qx + e2y * qy + e2z * qz) * inv


@njit(cache=True, parallel=True, error_model="numpy")
def _any_hit_batch(origins, dirs, tmin, tmax, skip,
                   node_min, node_max, node_left, node_right,
                   node_start, node_count, perm, v0, e1, e2):
    n = len(dirs)
    out = np.zeros(n, dtype=np.uint8)
    for r in prange(n):
        ox, oy, oz = origins[r, 0], origins[r, 1], origins[r, 2]
        dx, dy, dz = dirs[r, 0], dirs[r, 1], dirs[r, 2]
        lo_t = tmin[r]
        hi_t = tmax[r]
        skip_j = skip[r]
        stack = np.empty(_STACK_DEPTH, dtype=np.int64)
        top = 0
        stack[top] = 0
        top += 1
        hit = False
        while top > 0 and not hit:
            top -= 1
            node = stack[top]
            if not _slab_test(node_min[node], node_max[node], ox, oy, oz, dx, dy, dz, hi_t):
                continue
            if node_count[node] > 0:
                start = node_start[node]
                for k in range(node_count[node]):
                    j = perm[start + k]
                    if j == skip_j:
                        continue
                    t = _tri_hit_t(j, ox, oy, oz, dx, dy, dz, v0, e1, e2)
                    if lo_t < t < hi_t:
                        hit = True
                        break
            else:
                stack[top] = node_left[node]
                top += 1
                stack[top] = node_right[node]
                top += 1
        out[r] = 1 if hit else 0
    return out


@njit(cache=True, error_model="numpy")
def _count_hits(origin, direction,
                node_min, node_max, node_left, node_right,
                node_start, node_count, perm, v0, e1, e2):
    ox, oy, oz = origin[0], origin[1], origin[2]
    dx, dy, dz = direction[0], direction[1], direction[2]
    stack = np.empty(_STACK_DEPTH, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    hits = 0
    while top > 0:
        top -= 1
        node = stack[top]
        if not _slab_test(node_min[node], node_max[node], ox, oy, oz, dx, dy, dz, np.inf):
            continue
        if node_count[node] > 0:
            start = node_start[node]
            for k in range(node_count[node]):
                j = perm[start + k]
                t = _tri_hit_t(j, ox, oy, oz, dx, dy, dz, v0, e1, e2)
                if t > 1e-12:
                    hits += 1
        else:
            stack[top] = node_left[node]
            top += 1
            stack[top] = node_right[node]
            top += 1
    return hits
