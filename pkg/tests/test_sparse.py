import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heislab.errors import DomainError
from heislab.operators import dyadic, sparse
from heislab.operators.means import CellSphereAverager, sphere_rule
from heislab.runner.corpus import sparse_pairs


@pytest.fixture(scope="module")
def systems(sparse_grid):
    return dyadic.build_systems(sparse_grid, 0.75, 0, 2, seed=1, strict=False)


@pytest.fixture(scope="module")
def averager(sparse_grid):
    return CellSphereAverager(sparse_grid, sphere_rule(1, nodes=16))


@pytest.fixture(scope="module")
def bump(sparse_grid):
    z, t = sparse_grid.centers()
    return np.exp(-2.0 * np.sum(z * z, axis=-1) - 4.0 * t * t)


def test_linearization_sets(systems, averager, bump):
    system = systems[0]
    cubes = list(system.cubes())
    sets = sparse.linearize(bump, cubes, system, averager)
    assert sets.b_disjoint()
    assert sets.union_matches()
    for cube in cubes:
        assert np.all(sets.values[cube.key][sets.E[cube.key]] >= 0.5 * sets.sup[sets.E[cube.key]])
    assert sets.pairing(np.ones(bump.size), 1.0) >= 0.0


def test_full_linearization(systems, averager, bump):
    system = systems[0]
    cubes = list(system.cubes([1, 2]))
    sets = sparse.linearize_full(bump, cubes, system, averager, r_nodes=2)
    assert sets.b_disjoint() and sets.union_matches()
    radii = sparse.full_radii(0.5, 1, 4)
    assert radii[0] == pytest.approx(0.5 ** 3)
    assert all(0.5 ** 4 < r <= 0.5 ** 3 for r in radii)
    with pytest.raises(DomainError):
        sparse.full_radii(0.5, 1, 0)


def test_covering(systems, averager, bump):
    report = sparse.check_covering(bump, 1, systems, averager)
    assert report.holds
    assert report.checked + report.uncovered == averager.grid.size


@pytest.mark.parametrize("mult", [1.5, 2.0, 4.0])
def test_stopping_cubes_match_enumeration(systems, bump, mult):
    system = systems[2]
    for top in system.levels[0]:
        fast = sparse.cz_stopping(bump, top, 1.0, mult, system)
        brute = sparse.cz_stopping_brute(bump, top, 1.0, mult, system)
        assert [c.key for c in fast] == [c.key for c in brute]
    with pytest.raises(DomainError):
        sparse.cz_stopping(bump, system.levels[0][0], 1.0, 1.0, system)


def test_sparse_family(systems, bump):
    system = systems[0]
    top = max(system.levels[0], key=lambda c: c.cell_count)
    family = sparse.build_sparse_family(bump, bump, top, 1.5, 1.5, system)
    assert family.top is top
    assert family.is_sparse()
    assert family.flags == ()
    form = sparse.sparse_form(family, bump, bump, 1.5, 1.5, system.grid.cell_volume)
    assert form >= top.cell_count * system.grid.cell_volume * dyadic.cube_average(bump, top, 1.5) ** 2


def test_domination(systems, averager, bump):
    report = sparse.verify_domination(bump, bump, 1.9, 1.9, systems, averager)
    assert report.lhs > 0 and report.rhs > 0
    assert np.isfinite(report.ratio)
    with pytest.raises(DomainError):
        sparse.verify_domination(bump, bump, 1.0, 8.0, systems, averager)


def test_key_bound_over_the_corpus(sparse_grid, systems, averager):
    system = systems[0]
    for name, f, g in sparse_pairs(sparse_grid, seed=0):
        for top in system.levels[0]:
            bound = sparse.key_bound(f, g, top, 1.9, 1.9, system, averager)
            assert bound.lhs >= 0.0
            assert np.isfinite(bound.ratio), name
            # kept cubes never sit under an average above the stopping height
            assert bound.condition <= 2.0 + 1e-12
            sets = sparse.linearize(f, [top] + system.descendants(top), system, averager)
            assert bound.lhs <= sets.pairing(g, sparse_grid.cell_volume) * (1.0 + 1e-12) + 1e-15


def test_key_bound_without_stopping_cubes(systems, averager, sparse_grid):
    system = systems[0]
    top = max(system.levels[0], key=lambda c: c.cell_count)
    flat = np.ones(sparse_grid.size)
    bound = sparse.key_bound(flat, flat, top, 1.9, 1.9, system, averager)
    assert bound.kept == 1 + len(system.descendants(top))
    assert bound.condition == pytest.approx(1.0)
    assert bound.rhs == pytest.approx(top.cell_count * sparse_grid.cell_volume)


def test_domination_with_rho_averages(systems, averager, bump):
    plain = sparse.verify_domination(bump, bump, 1.9, 1.9, systems, averager)
    bounded = sparse.verify_domination(bump, bump, 1.9, 1.9, systems, averager, rho=2.5)
    assert bounded.lhs == pytest.approx(plain.lhs)
    # rho-averages dominate p-averages
    assert bounded.rhs >= plain.rhs * (1.0 - 1e-12)
    assert np.isfinite(bounded.ratio)
    with pytest.raises(DomainError):
        sparse.verify_domination(bump, bump, 1.9, 1.9, systems, averager, rho=1.9)


def test_lorentz_norm_of_an_indicator():
    values = np.array([3.0, 3.0, 0.0, 0.0])
    assert sparse.lorentz_norm(values, 2.0, 0.25) == pytest.approx(3.0 * np.sqrt(0.5))
    assert sparse.lorentz_norm_rearrangement(values, 2.0, 0.25) == pytest.approx(2.0 * 3.0 * np.sqrt(0.5))
    with pytest.raises(DomainError):
        sparse.lorentz_norm(values, 1.0, 0.25)


@settings(max_examples=60)
@given(st.lists(st.floats(min_value=1e-3, max_value=1e3), min_size=1, max_size=40),
       st.floats(min_value=1.1, max_value=6.0))
def test_level_set_lemma(values, r):
    lhs, rhs = sparse.check_level_set_lemma(np.array(values), r, 1.0 / len(values))
    assert lhs <= rhs * (1.0 + 1e-12)


@pytest.mark.parametrize("r,p", [(1.5, 2.0), (2.0, 3.0), (1.2, 1.3), (3.0, 10.0)])
def test_probability_constant(r, p):
    assert sparse.proba_constant(r, p) == pytest.approx(sparse.proba_constant_quadrature(r, p), rel=1e-8)


def test_probability_constant_domain():
    with pytest.raises(DomainError):
        sparse.proba_constant(2.0, 2.0)
    with pytest.raises(DomainError):
        sparse.proba_constant(1.0, 3.0)


@settings(max_examples=40)
@given(st.lists(st.floats(min_value=0.0, max_value=50.0), min_size=1, max_size=30),
       st.sampled_from([(1.5, 2.0), (2.0, 4.0)]))
def test_probability_lemma(values, exponents):
    r, p = exponents
    lhs, rhs = sparse.check_proba_lemma(np.array(values), r, p, 1.0 / len(values))
    assert lhs <= rhs * (1.0 + 1e-10) + 1e-12


def test_overlap_and_carleson(systems, bump):
    system = systems[0]
    top = max(system.levels[0], key=lambda c: c.cell_count)
    family = sparse.build_sparse_family(bump, bump, top, 1.5, 1.5, system)
    assert sparse.overlap_depth(family.cubes, system.grid.size) >= 1
    assert sparse.overlap_depth([], system.grid.size) == 0
    lhs, rhs = sparse.carleson_check(family, bump, 1.0, 2.0, system.grid.cell_volume)
    assert lhs > 0 and rhs > 0
    with pytest.raises(DomainError):
        sparse.carleson_check(family, bump, 2.0, 2.0, system.grid.cell_volume)
