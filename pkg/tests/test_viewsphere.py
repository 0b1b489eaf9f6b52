import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockworld.viewsphere import (
    fibonacci_lattice,
    look_at,
    map_to_tile,
    viewpoints_to_json,
)

unit_vec = st.tuples(
    st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)
).filter(lambda v: 1e-3 < np.linalg.norm(v) <= 2.0)


def test_lattice_single_point_sits_on_equator():
    (vp,) = fibonacci_lattice(1, 3.0)
    assert vp.position[2] == 0.0
    assert np.linalg.norm(vp.position) == pytest.approx(3.0, rel=1e-9)


def test_lattice_all_points_on_sphere():
    vps = fibonacci_lattice(768, 2.0)
    assert len(vps) == 768
    norms = np.linalg.norm(np.stack([v.position for v in vps]), axis=1)
    np.testing.assert_allclose(norms, 2.0, rtol=1e-9)


def test_lattice_no_duplicates():
    pts = np.stack([v.position for v in fibonacci_lattice(500, 1.0)])
    assert len(np.unique(pts, axis=0)) == 500


def test_lattice_bitwise_deterministic():
    a = np.stack([v.position for v in fibonacci_lattice(768, 2.0)])
    b = np.stack([v.position for v in fibonacci_lattice(768, 2.0)])
    np.testing.assert_array_equal(a, b)


def test_lattice_rejects_bad_arguments():
    with pytest.raises(ValueError):
        fibonacci_lattice(0, 1.0)
    with pytest.raises(ValueError):
        fibonacci_lattice(10, 0.0)


def test_lattice_nearest_neighbor_ratio():
    pts = np.stack([v.position for v in fibonacci_lattice(768, 2.0)])
    cosine = np.clip(pts @ pts.T / 4.0, -1.0, 1.0)
    np.fill_diagonal(cosine, -1.0)
    nn_angle = np.arccos(cosine.max(axis=1))
    assert nn_angle.max() / nn_angle.min() < 2.0


def test_look_at_straight_down_z():
    pose = look_at((0, 0, 2), (0, 0, 0))
    np.testing.assert_allclose(pose.forward, [0, 0, -1], atol=1e-12)
    np.testing.assert_allclose(pose.up, [0, 1, 0], atol=1e-12)


def test_look_at_degenerate_vertical():
    pose = look_at((0, 2, 0), (0, 0, 0))
    np.testing.assert_allclose(pose.forward, [0, -1, 0], atol=1e-12)
    # Up reference falls back to world +X.
    assert abs(pose.up @ np.array([0, 1, 0.0])) < 1e-12


def test_look_at_coincident_raises():
    with pytest.raises(ValueError):
        look_at((1, 2, 3), (1, 2, 3))


@settings(max_examples=100, deadline=None)
@given(pos=unit_vec, target=unit_vec)
def test_look_at_rotation_is_orthonormal(pos, target):
    pos = np.asarray(pos) * 5.0
    target = np.asarray(target)
    if np.linalg.norm(pos - target) < 1e-6:
        return
    pose = look_at(pos, target)
    np.testing.assert_allclose(pose.rotation.T @ pose.rotation, np.eye(3), atol=1e-9)
    fwd = (target - pos) / np.linalg.norm(target - pos)
    np.testing.assert_allclose(pose.forward, fwd, atol=1e-9)


def test_map_to_tile_labeling_convention():
    assert map_to_tile((1, 1, 1)) == 1
    assert map_to_tile((-1, -1, -1)) == 8
    assert map_to_tile((-1, 1, 1)) == 5
    assert map_to_tile((1, -1, 1)) == 3
    assert map_to_tile((1, 1, -1)) == 2


def test_map_to_tile_zero_is_positive():
    # Boundary coordinates resolve to the positive side.
    assert map_to_tile((0, 1, 1)) == 1
    assert map_to_tile((0, 0, 1)) == 1
    assert map_to_tile((0, -1, 0)) == 3


def test_map_to_tile_rejects_zero_vector():
    with pytest.raises(ValueError):
        map_to_tile((0, 0, 0))


@settings(max_examples=100, deadline=None)
@given(v=unit_vec, scale=st.floats(1e-3, 1e6))
def test_map_to_tile_scale_invariant(v, scale):
    assert map_to_tile(np.asarray(v) * scale) == map_to_tile(v)


@settings(max_examples=100, deadline=None)
@given(v=unit_vec)
def test_map_to_tile_antipodal_complement(v):
    v = np.asarray(v)
    if np.any(v == 0.0):
        return
    assert map_to_tile(-v) == 9 - map_to_tile(v)


def test_tiles_partition_the_lattice():
    vps = fibonacci_lattice(768, 2.0)
    counts = np.bincount([map_to_tile(v.position) for v in vps], minlength=9)[1:]
    assert counts.sum() == 768
    assert (counts > 0).all()


def test_viewpoints_json_rows():
    rows = viewpoints_to_json(fibonacci_lattice(4, 2.0))
    assert [r["index"] for r in rows] == [0, 1, 2, 3]
    for r in rows:
        assert set(r) == {"index", "x", "y", "z", "tile"}
        assert math.isclose(math.hypot(r["x"], r["y"], r["z"]), 2.0, rel_tol=1e-9)
        assert 1 <= r["tile"] <= 8
