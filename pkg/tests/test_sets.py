import numpy as np
import pytest
from hypothesis import given, strategies as st

from gamenewton import Box, Polyhedron, unbounded_box
from gamenewton.sets import project_blockwise


def test_box_projection_clips():
    b = Box(lower=np.array([0.0, -1.0]), upper=np.array([2.0, 1.0]))
    p = b.project(np.array([-3.0, 5.0]))
    assert np.allclose(p, [0.0, 1.0])
    assert b.contains(p)
    assert not b.contains(np.array([3.0, 0.0]))


def test_unbounded_box_is_identity():
    b = unbounded_box(3)
    x = np.array([1e8, -1e8, 0.0])
    assert np.allclose(b.project(x), x)
    assert b.contains(x)


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=2))
def test_box_projection_idempotent(vals):
    b = Box(lower=np.array([-1.0, -2.0]), upper=np.array([3.0, 0.5]))
    x = np.array(vals)
    p = b.project(x)
    assert b.contains(p)
    assert np.allclose(b.project(p), p)


def test_polyhedron_projection_matches_halfspace():
    # single halfspace x1 + x2 <= 1
    poly = Polyhedron(A=np.array([[1.0, 1.0]]), b=np.array([1.0]))
    x = np.array([1.0, 1.0])
    p = poly.project(x)
    assert np.allclose(p, [0.5, 0.5], atol=1e-9)
    inside = np.array([0.1, 0.2])
    assert np.allclose(poly.project(inside), inside)


def test_polyhedron_projection_obtuse_corner():
    # nonnegative orthant as a polyhedron
    poly = Polyhedron(A=-np.eye(2), b=np.zeros(2))
    p = poly.project(np.array([-1.0, -2.0]))
    assert np.allclose(p, [0.0, 0.0], atol=1e-9)


@given(
    st.lists(st.floats(-10, 10), min_size=2, max_size=2),
    st.lists(st.floats(-10, 10), min_size=2, max_size=2),
)
def test_polyhedron_projection_nonexpansive(u, v):
    poly = Polyhedron(A=np.array([[1.0, 1.0], [-1.0, 0.5]]), b=np.array([1.0, 2.0]))
    pu, pv = poly.project(np.array(u)), poly.project(np.array(v))
    assert np.linalg.norm(pu - pv) <= np.linalg.norm(np.array(u) - np.array(v)) + 1e-7


def test_project_blockwise_respects_blocks():
    sets = [Box(np.zeros(1), np.ones(1)), Box(-np.ones(2), np.ones(2))]
    x = np.array([5.0, -3.0, 0.5])
    p = project_blockwise(sets, [1, 2], x)
    assert np.allclose(p, [1.0, -1.0, 0.5])
