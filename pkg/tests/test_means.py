import numpy as np
import pytest

from heislab.errors import DimensionMismatch, DomainError
from heislab.operators import means
from heislab.operators.heis_core import HeisPoint, dilate, dist_arrays, group_inv, group_mul, mul_arrays

RULE = means.sphere_rule(1, nodes=16)


def bump(z, t):
    z = np.asarray(z, dtype=float)
    return np.exp(-np.sum(z * z, axis=-1) - np.asarray(t, dtype=float) ** 2)


def squared_radius(z, t):
    z = np.asarray(z, dtype=float)
    return np.sum(z * z, axis=-1) + 0.0 * np.asarray(t, dtype=float)


def ones(z, t):
    return np.ones_like(np.asarray(t, dtype=float))


def test_sphere_rules():
    circle = means.sphere_rule(1)
    assert circle.size == 128
    assert circle.weights.sum() == pytest.approx(1.0, rel=1e-14)
    assert np.allclose(np.sum(circle.nodes * circle.nodes, axis=-1), 1.0)
    hopf = means.sphere_rule(2)
    assert hopf.size == 16 * 16 * 8
    assert hopf.weights.sum() == pytest.approx(1.0, rel=1e-13)
    assert np.all(hopf.weights > 0)
    assert np.allclose(np.sum(hopf.nodes * hopf.nodes, axis=-1), 1.0)


def test_sphere_rule_errors():
    with pytest.raises(DomainError):
        means.sphere_rule(1, nodes=7)
    with pytest.raises(DomainError):
        means.sphere_rule(3)


@pytest.mark.parametrize("n", [1, 2])
def test_means_of_simple_functions_are_exact(n):
    rule = means.sphere_rule(n, nodes=8)
    rng = np.random.default_rng(n)
    z = rng.normal(size=(5, 2 * n))
    t = rng.normal(size=5)
    for r in (0.3, 1.0, 2.5):
        assert np.allclose(means.spherical_mean(ones, r, z, t, rule), 1.0, rtol=1e-14)
        # the twist averages out because the nodes sum to zero
        assert np.allclose(means.spherical_mean(lambda zz, tt: tt, r, z, t, rule), t, atol=1e-12)
        expected = np.sum(z * z, axis=-1) + r * r
        assert np.allclose(means.spherical_mean(squared_radius, r, z, t, rule), expected, rtol=1e-12)


def test_spherical_mean_errors():
    with pytest.raises(DomainError):
        means.spherical_mean(ones, 0.0, np.zeros((1, 2)), np.zeros(1), RULE)
    with pytest.raises(DimensionMismatch):
        means.spherical_mean(ones, 1.0, np.zeros((1, 4)), np.zeros(1), RULE)


def test_means_commute_with_left_translation():
    y = HeisPoint([0.2, -0.1], 0.3)
    x = HeisPoint([0.5, 0.4], -0.2)

    def shifted(z, t):
        zz, tt = mul_arrays(y.z, y.t, z, t)
        return bump(zz, tt)

    yx = group_mul(y, x)
    for r in (0.5, 1.5):
        lhs = means.quadrature_spherical_mean(shifted, r, x, RULE).scalar()
        rhs = means.quadrature_spherical_mean(bump, r, yx, RULE).scalar()
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_dilation_moves_the_radius_into_the_function():
    x = HeisPoint([0.4, -0.3], 0.2)
    for r in (0.5, 2.0):
        direct = means.quadrature_spherical_mean(bump, r, x, RULE).scalar()
        rescaled = means.quadrature_spherical_mean(means.dilate_field(bump, r), 1.0, dilate(1.0 / r, x), RULE)
        assert rescaled.scalar() == pytest.approx(direct, rel=1e-12)
    with pytest.raises(DomainError):
        means.dilate_field(bump, 0.0)


def test_translated_field():
    y = HeisPoint([0.2, -0.1], 0.3)
    x = HeisPoint([0.5, 0.4], -0.2)
    moved = means.translate(bump, y)
    expected = group_mul(x, group_inv(y))
    assert moved(x.z, x.t) == pytest.approx(bump(expected.z, expected.t), rel=1e-14)


def test_sampled_field_interpolates_linear_functions(small_grid):
    field = means.SampledField.from_function(lambda z, t: z[..., 0] + 2.0 * t, small_grid)
    z = np.array([[0.1, 0.2], [1.1, -0.4], [1.5, 0.0]])
    t = np.array([0.3, -0.7, 0.0])
    assert np.allclose(field(z, t), [0.7, -0.3, 0.0], atol=1e-12)
    with pytest.raises(DimensionMismatch):
        field(np.zeros((1, 4)), np.zeros(1))
    with pytest.raises(DomainError):
        means.SampledField(small_grid, np.full(small_grid.size, np.nan))


def test_sampled_field_norms(small_grid):
    field = means.SampledField(small_grid, np.ones(small_grid.size))
    assert field.norm(1.0) == pytest.approx(small_grid.region.volume, rel=1e-12)
    assert field.norm(np.inf) == 1.0
    assert field.boundary_mass() == pytest.approx(1.0 - 6 * 6 * 14 / (8 * 8 * 16))
    assert means.SampledField(small_grid, np.zeros(small_grid.size)).boundary_mass() == 0.0


def test_dilating_a_sampled_field_rescales_its_box(small_grid):
    field = means.SampledField.from_function(bump, small_grid)
    dilated = means.dilate_field(field, 2.0)
    assert dilated.region.half_widths == pytest.approx((0.6, 0.6, 0.2))
    z, t = small_grid.centers()
    assert np.allclose(dilated(z[:20] / 2.0, t[:20] / 4.0), field.flat[:20], rtol=1e-9, atol=1e-12)


def test_translating_a_sampled_field_resamples(small_grid):
    field = means.SampledField.from_function(bump, small_grid)
    moved = means.translate(field, HeisPoint.identity(1))
    assert isinstance(moved, means.SampledField)
    assert np.allclose(moved.values, field.values, atol=1e-12)
    with pytest.raises(DimensionMismatch):
        means.translate(field, HeisPoint.identity(2))


def test_leaving_the_sampled_region_is_flagged(small_grid):
    field = means.SampledField(small_grid, np.ones(small_grid.size))
    result = means.quadrature_spherical_mean(field, 1.0, HeisPoint([1.0, 0.0], 0.0), RULE)
    assert result.flags == ("boundary-mass",)
    inside = means.quadrature_spherical_mean(field, 0.1, HeisPoint.identity(1), RULE)
    assert inside.flags == ()


def test_maximal_quantities():
    x = (np.array([[0.3, 0.1]]), np.array([0.2]))
    assert means.lacunary_max(ones, 0.5, (0, 4), x, RULE)[0] == pytest.approx(1.0)
    assert np.allclose(means.local_radii(0.5, 3), [1.0, np.sqrt(2.0), 2.0])
    assert np.array_equal(means.local_radii(0.5, 1), [1.0])
    best = means.local_max(bump, 0.5, 6, x, RULE)[0]
    assert best >= abs(means.spherical_mean(bump, 1.0, *x, RULE)[0])
    with pytest.raises(DomainError):
        means.lacunary_max(ones, 1.5, (0, 2), x, RULE)
    with pytest.raises(DomainError):
        means.local_radii(0.5, 0)


def test_derivative_mean_of_a_quadratic():
    x = HeisPoint([0.3, -0.2], 0.1)
    for r in (0.5, 1.5):
        assert means.derivative_mean_quadrature(squared_radius, r, x, RULE)[0] == pytest.approx(2.0 * r, rel=1e-8)
    with pytest.raises(DomainError):
        means.derivative_mean_quadrature(squared_radius, 1e-4, x, RULE)


@pytest.mark.parametrize("f", [bump, squared_radius])
def test_local_maximum_is_controlled_by_the_derivative(f):
    x = HeisPoint.identity(1)
    report = means.ftc_majorant(f, 0.5, 5, x, RULE, fine_nodes=60)
    assert report.holds


def test_continuity_and_improving_ratios(small_grid):
    assert means.continuity_ratio(bump, HeisPoint.identity(1), 2.0, 2.0, 0.5, small_grid, RULE) == 0.0
    moved = means.continuity_ratio(bump, HeisPoint([0.3, 0.0], 0.0), 2.0, 2.0, 0.5, small_grid, RULE)
    assert 0.0 < moved < 2.0
    with pytest.raises(DomainError):
        means.continuity_ratio(bump, HeisPoint([2.0, 0.0], 0.0), 2.0, 2.0, 0.5, small_grid, RULE)
    assert means.lp_improving_ratio(ones, 2.0, 2.0, small_grid, RULE) == pytest.approx(1.0, rel=1e-12)


def test_cell_averager_tables(small_grid):
    averager = means.CellSphereAverager(small_grid, RULE)
    table = averager.targets(0.5)
    assert table.dtype == np.int32
    assert table.shape == (small_grid.size, RULE.size)
    assert np.any(table < 0)
    assert averager.targets(0.5) is table
    with pytest.raises(DomainError):
        averager.targets(0.0)
    with pytest.raises(DimensionMismatch):
        means.CellSphereAverager(small_grid, means.sphere_rule(2, nodes=4))


def test_cell_averager_means(small_grid):
    averager = means.CellSphereAverager(small_grid, RULE)
    values = np.ones(small_grid.size)
    full = averager.apply(values, 0.5)
    complete = np.all(averager.targets(0.5) >= 0, axis=1)
    assert np.allclose(full[complete], 1.0)
    assert np.all(full[~complete] < 1.0)
    assert np.allclose(averager.max_over(values, [0.3, 0.5]), np.maximum(averager.apply(values, 0.3), full))


@pytest.mark.parametrize("cell, radius", [(0, 0.5), (300, 0.9), (777, 0.31), (512, 5.0)])
def test_ball_cells_match_a_full_scan(small_grid, cell, radius):
    z, t = small_grid.centers()
    center = small_grid.center(cell)
    expected = np.flatnonzero(dist_arrays(center.z, center.t, z, t) < radius)
    assert np.array_equal(np.sort(means.ball_cells(small_grid, center, radius)), expected)
