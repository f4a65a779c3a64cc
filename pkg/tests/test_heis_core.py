import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heislab.errors import DimensionMismatch, DomainError
from heislab.operators.heis_core import (BoxRegion, CellGrid, HeisPoint, ball_contains, dilate,
                                         dist_arrays, dist_left, group_inv, group_mul, koranyi_norm,
                                         mul_arrays, norm_arrays, quasi_triangle_constant, random_points)

from conftest import heis_points

radii = st.floats(min_value=0.05, max_value=20.0)


def close(a: HeisPoint, b: HeisPoint, tol: float = 1e-12) -> bool:
    scale = max(1.0, np.abs(a.as_array()).max(), np.abs(b.as_array()).max())
    return np.allclose(a.as_array(), b.as_array(), rtol=0.0, atol=tol * scale * scale)


def test_group_law_example():
    product = group_mul(HeisPoint.from_complex([1.0], 0.0), HeisPoint.from_complex([1j], 0.0))
    assert product == HeisPoint.from_complex([1 + 1j], -0.5)


@given(heis_points(1))
def test_identity_and_inverse(a):
    e = HeisPoint.identity(1)
    assert group_mul(e, a) == a
    assert close(group_mul(a, group_inv(a)), e)
    assert group_inv(group_inv(a)) == a


def test_inverse_of_axis_points():
    assert group_inv(HeisPoint([0.0, 0.0], 3.0)) == HeisPoint([0.0, 0.0], -3.0)
    assert group_inv(HeisPoint([1.0, -2.0], 0.0)) == HeisPoint([-1.0, 2.0], 0.0)


def test_associativity_on_many_triples(rng):
    for n in (1, 2):
        z = [rng.normal(size=(10000, 2 * n)) for _ in range(3)]
        t = [rng.normal(size=10000) for _ in range(3)]
        left = mul_arrays(*mul_arrays(z[0], t[0], z[1], t[1]), z[2], t[2])
        right = mul_arrays(z[0], t[0], *mul_arrays(z[1], t[1], z[2], t[2]))
        assert np.allclose(left[0], right[0], rtol=1e-12, atol=1e-12)
        assert np.allclose(left[1], right[1], rtol=1e-12, atol=1e-12)


def test_dimension_mismatch_is_an_error():
    with pytest.raises(DimensionMismatch):
        group_mul(HeisPoint.identity(1), HeisPoint.identity(2))
    with pytest.raises(DimensionMismatch):
        HeisPoint([1.0, 2.0, 3.0], 0.0)


def test_points_must_be_finite():
    with pytest.raises(DomainError):
        HeisPoint([np.nan, 0.0], 0.0)
    with pytest.raises(DomainError):
        HeisPoint([0.0, 0.0], np.inf)


def test_norm_examples():
    assert koranyi_norm(HeisPoint([0.0, 0.0], 4.0)) == pytest.approx(2.0)
    assert koranyi_norm(HeisPoint([3.0, 4.0], 0.0)) == pytest.approx(5.0)
    assert koranyi_norm(HeisPoint([0.0, 0.0], -9.0)) == pytest.approx(3.0)
    assert koranyi_norm(HeisPoint.identity(2)) == 0.0


@given(heis_points(2), radii, radii)
def test_dilation_homogeneity_and_composition(a, r, s):
    assert koranyi_norm(dilate(r, a)) == pytest.approx(r * koranyi_norm(a), rel=1e-12, abs=1e-300)
    assert close(dilate(r, dilate(s, a)), dilate(r * s, a), tol=1e-11)


@given(heis_points(1), heis_points(1), radii)
def test_dilation_is_an_automorphism(a, b, r):
    assert close(dilate(r, group_mul(a, b)), group_mul(dilate(r, a), dilate(r, b)), tol=1e-10)


def test_dilation_examples():
    a = HeisPoint([1.0, -2.0], 3.0)
    assert dilate(1.0, a) == a
    assert dilate(2.0, a) == HeisPoint([2.0, -4.0], 12.0)
    with pytest.raises(DomainError):
        dilate(0.0, a)


@settings(max_examples=200)
@given(heis_points(1), heis_points(1), heis_points(1))
def test_left_invariance(a, x, y):
    assert dist_left(group_mul(a, x), group_mul(a, y)) == pytest.approx(dist_left(x, y), rel=1e-8, abs=1e-6)


@given(heis_points(2))
def test_distance_to_identity_is_the_norm(y):
    assert dist_left(y, y) == 0.0
    assert dist_left(HeisPoint.identity(2), y) == pytest.approx(koranyi_norm(y))


def test_ball_boundary_is_excluded():
    center = HeisPoint([0.5, 0.0], 0.25)
    x = group_mul(center, HeisPoint([0.0, 0.0], 4.0))
    assert ball_contains(center, 1.0, center)
    assert dist_left(center, x) == pytest.approx(2.0)
    assert not ball_contains(center, 2.0, x)
    assert ball_contains(center, 2.0 + 1e-9, x)
    with pytest.raises(DomainError):
        ball_contains(center, 0.0, x)


@given(heis_points(1), heis_points(1), radii)
def test_ball_translation_covariance(a, x, r):
    shifted = group_mul(group_inv(a), x)
    expected = koranyi_norm(shifted) < r
    # membership is decided by the same number both ways unless it sits on the boundary
    if abs(koranyi_norm(shifted) - r) > 1e-9 * max(1.0, r):
        assert ball_contains(a, r, x) == expected


def test_quasi_triangle_constant_is_measured():
    constant = quasi_triangle_constant(1, samples=5000, seed=3)
    assert 1.0 <= constant < 4.0
    assert quasi_triangle_constant(1, samples=5000, seed=3) == constant


def test_random_points_shapes():
    z, t = random_points(np.random.default_rng(0), 2, 50, scale=2.0)
    assert z.shape == (50, 4) and t.shape == (50,)
    again = random_points(np.random.default_rng(0), 2, 50, scale=2.0)
    assert np.array_equal(z, again[0]) and np.array_equal(t, again[1])


def test_vectorised_forms_agree_with_points(rng):
    z1, z2 = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
    t1, t2 = rng.normal(size=2), rng.normal(size=2)
    d = dist_arrays(z1, t1, z2, t2)
    for i in range(2):
        assert d[i] == pytest.approx(dist_left(HeisPoint(z1[i], t1[i]), HeisPoint(z2[i], t2[i])))
    assert norm_arrays(z1, t1)[0] == pytest.approx(koranyi_norm(HeisPoint(z1[0], t1[0])))


def test_box_region_and_grid(small_grid):
    with pytest.raises(DomainError):
        BoxRegion((1.0, 0.0, 1.0))
    with pytest.raises(DimensionMismatch):
        BoxRegion((1.0, 1.0))
    assert small_grid.size == 8 * 8 * 16
    assert small_grid.size * small_grid.cell_volume == pytest.approx(small_grid.region.volume)
    z, t = small_grid.centers()
    assert np.array_equal(small_grid.locate(z, t), np.arange(small_grid.size))
    assert small_grid.locate(np.array([[5.0, 0.0]]), np.array([0.0]))[0] == -1
    corner = np.array([[1.2, 1.2]]), np.array([0.8])
    assert small_grid.locate(*corner)[0] == small_grid.size - 1
    assert small_grid.refine(2).size == 8 * small_grid.size


def test_grid_needs_matching_counts():
    with pytest.raises(DimensionMismatch):
        CellGrid(BoxRegion.isotropic(1, 1.0, 1.0), (4, 4))
