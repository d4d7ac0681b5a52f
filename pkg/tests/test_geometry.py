import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from localregret.exceptions import DimensionError, PreconditionError
from localregret.geometry import AllSpace, Ball, Box, diameter, displacement, is_interior, project


def test_project_examples():
    assert np.array_equal(project(Ball([0, 0], 1.0), [2, 0]), [1, 0])
    assert np.array_equal(project(Box([-1, -1], [1, 1]), [0.5, 3]), [0.5, 1])
    assert np.array_equal(project(AllSpace(3), [4, -2, 7]), [4, -2, 7])


def test_project_dimension_mismatch():
    with pytest.raises(DimensionError):
        project(Ball([0, 0], 1.0), [1, 2, 3])


def test_displacement_examples():
    assert np.allclose(displacement(Ball([0, 0], 1.0), [0, 0], [0.3, 0.4]), [0.3, 0.4], atol=0)
    assert np.array_equal(displacement(Ball([0, 0], 1.0), [1, 0], [1, 0]), [0, 0])
    # clamp (1.2, 0.7) -> (1.0, 0.7), then subtract x
    out = displacement(Box([0, 0], [1, 1]), [0.9, 0.5], [0.3, 0.2])
    assert out == pytest.approx([1.0 - 0.9, 0.7 - 0.5], abs=1e-15)


def test_displacement_rejects_outside_point():
    with pytest.raises(PreconditionError):
        displacement(Ball([0, 0], 1.0), [1.5, 0], [0, 0])


def test_diameter_examples():
    assert diameter(Ball([0, 0], 1.5)) == 3.0
    assert diameter(Box([0, 0], [3, 4])) == 5.0
    assert diameter(AllSpace(2)) == math.inf


def test_is_interior_examples():
    assert is_interior(Ball([0, 0], 1.0), [0, 0], 0.5)
    assert not is_interior(Ball([0, 0], 1.0), [0.9, 0], 0.2)
    assert is_interior(Box([0, 0], [1, 1]), [0.5, 0.5], 0.4)
    assert is_interior(AllSpace(2), [1e9, -1e9], 1e6)


@pytest.mark.parametrize(
    "make",
    [lambda: Ball([0, 0], 0.0), lambda: Ball([0, 0], -1.0), lambda: Box([0, 1], [1, 1])],
)
def test_invalid_sets(make):
    with pytest.raises(PreconditionError):
        make()


def test_batch_projection_matches_pointwise():
    rng = np.random.default_rng(3)
    K = Ball([0.5, -0.5, 1.0], 1.3)
    pts = rng.normal(scale=3, size=(50, 3))
    batch = project(K, pts)
    for p, q in zip(pts, batch):
        assert np.array_equal(project(K, p), q)


# ---------------------------------------------------------------- properties

coords = st.floats(-10, 10, allow_nan=False)


def sets_2d():
    return st.one_of(
        st.builds(lambda cx, cy, r: Ball([cx, cy], r), coords, coords, st.floats(0.1, 5)),
        st.builds(
            lambda lx, ly, wx, wy: Box([lx, ly], [lx + wx, ly + wy]),
            coords, coords, st.floats(0.1, 5), st.floats(0.1, 5),
        ),
        st.just(AllSpace(2)),
    )


points = st.lists(st.floats(-20, 20, allow_nan=False), min_size=2, max_size=2).map(np.array)
TOL = 1e-10


@settings(max_examples=300, deadline=None)
@given(sets_2d(), points, points)
def test_projection_non_expansive(K, x, y):
    assert np.linalg.norm(project(K, x) - project(K, y)) <= np.linalg.norm(x - y) + TOL


@settings(max_examples=300, deadline=None)
@given(sets_2d(), points)
def test_projection_idempotent_and_feasible(K, x):
    p = project(K, x)
    assert K.contains(p)
    assert np.array_equal(project(K, p), p)


@settings(max_examples=300, deadline=None)
@given(sets_2d(), points, points)
def test_projection_obtuse_angle(K, y, z_raw):
    # <z - proj(y), proj(y) - y> >= 0 for every z in the set
    z = project(K, z_raw)
    p = project(K, y)
    assert float((z - p) @ (p - y)) >= -TOL * max(1.0, np.linalg.norm(z - p) * np.linalg.norm(p - y))


@settings(max_examples=300, deadline=None)
@given(sets_2d(), points, points)
def test_step_contraction(K, x_raw, y):
    x = project(K, x_raw)
    assert np.linalg.norm(x - project(K, y)) <= np.linalg.norm(x - y) + TOL


@settings(max_examples=300, deadline=None)
@given(sets_2d(), points, points)
def test_displacement_properties(K, x_raw, u):
    x = project(K, x_raw)
    assert np.array_equal(displacement(K, x, np.zeros(2)), np.zeros(2))
    d = displacement(K, x, u)
    assert np.linalg.norm(d) <= np.linalg.norm(u) + TOL
    if K.contains(x + u, tol=0.0):
        assert np.allclose(d, u, atol=TOL, rtol=0)


def test_sampling_stays_inside():
    rng = np.random.default_rng(0)
    for K in (Ball([1, 2, 3], 0.5), Box([0, 0, 0], [1, 2, 3])):
        assert np.all(K.contains(K.sample(rng, 1000)))
