from fractions import Fraction

import pytest

from heislab.errors import DomainError
from heislab.operators import regions


def test_vertices_are_exact_rationals():
    tri = regions.S_prime(2)
    assert (Fraction(7, 10), Fraction(3, 10)) in tri.vertices
    assert all(isinstance(c, Fraction) for v in tri.vertices for c in v)
    assert (Fraction(3, 4), Fraction(3, 4)) in regions.F_prime(2).vertices
    assert (Fraction(7, 13), Fraction(6, 13)) in regions.F_prime(2).vertices


def test_duality_maps_q_to_its_conjugate():
    assert set(regions.S(3).vertices) == {(Fraction(0), Fraction(1)), (Fraction(1), Fraction(0)),
                                          (Fraction(10, 13), Fraction(10, 13))}
    assert set(regions.dual(regions.dual(regions.F_prime(4))).vertices) == set(regions.F_prime(4).vertices)


@pytest.mark.parametrize("n", range(2, 7))
def test_euclidean_vertex_lies_inside(n):
    point = (Fraction(n, n + 1), Fraction(n, n + 1))
    assert regions.contains(regions.lacunary_sparse(n), point)
    assert point in regions.euclidean_lacunary(n).vertices


@pytest.mark.parametrize("n", range(2, 11))
def test_full_triangle_inside_lacunary_triangle(n):
    assert regions.triangle_inside(regions.F_prime(n), regions.S_prime(n))
    assert not regions.triangle_inside(regions.S_prime(n), regions.F_prime(n))


def test_strict_membership_excludes_edges():
    tri = regions.S_prime(2)
    midpoint = (Fraction(1, 2), Fraction(1, 2))
    assert not regions.contains(tri, midpoint)
    assert regions.contains(tri, midpoint, strict=False)
    assert regions.contains(tri, tri.centroid())


def test_degenerate_and_unknown_triangles():
    with pytest.raises(DomainError):
        regions.ExponentTriangle("line", 1, ((0, 0), (Fraction(1, 2), Fraction(1, 2)), (1, 1)))
    with pytest.raises(DomainError):
        regions.ExponentTriangle("outside", 1, ((0, 0), (2, 0), (0, 1)))
    with pytest.raises(DomainError):
        regions.triangle("no-such-triangle", 2)
    with pytest.raises(DomainError):
        regions.triangle("S", 0)


def test_polyline_is_closed():
    line = regions.boundary_polyline(regions.F(2), samples_per_edge=4)
    assert len(line) == 13
    assert line[0] == line[-1]


def test_vertex_table_lists_every_triangle():
    table = regions.vertex_table(2)
    assert set(table["triangle"]) == set(regions.TRIANGLES)
    assert len(table) == 3 * len(regions.TRIANGLES)
    row = table[(table["triangle"] == "S_prime") & (table["p_inv"] == "7/10")].iloc[0]
    assert row["q_inv"] == "3/10"
    assert row["q_inv_float"] == pytest.approx(0.3)
