import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import i0, i1

from heislab.errors import DomainError
from heislab.operators import laguerre, spectral
from heislab.operators.heis_core import HeisPoint, dilate
from heislab.operators.means import derivative_mean_quadrature, sphere_rule, spherical_mean

UNIT = spectral.GaussianProfile(1.0, 1.0, name="g-unit")
SHIFTED = spectral.GaussianProfile(0.75, 1.5, 0.5, 1, 2.0, "g-shifted")


def radial(z, t):
    """exp(-|z|^2), constant in t"""
    z = np.asarray(z, dtype=float)
    return np.exp(-np.sum(z * z, axis=-1)) * np.ones_like(np.asarray(t, dtype=float))


def test_profile_validation_and_dilation():
    with pytest.raises(DomainError):
        spectral.GaussianProfile(0.0, 1.0)
    with pytest.raises(DomainError):
        spectral.ProfileSum((UNIT, spectral.GaussianProfile(1.0, 1.0, n=2)))
    z, t = np.array([[0.3, -0.2]]), np.array([0.4])
    assert SHIFTED.dilated(2.0)(z, t)[0] == pytest.approx(SHIFTED(2.0 * z, 4.0 * t)[0], rel=1e-14)


def test_partial_transform_closed_form_against_quadrature():
    lam = 1.3
    z = np.array([[0.2, 0.1], [-0.5, 0.7]])
    closed = spectral.partial_ft(SHIFTED, lam)
    numeric = spectral.partial_ft(lambda zz, tt: SHIFTED(zz, tt), lam)
    assert closed.provenance == "closed-form"
    assert numeric.provenance == "quadrature"
    assert np.allclose(closed(z), numeric(z), rtol=1e-8, atol=1e-10)
    assert not numeric.flags


def test_partial_transform_is_conjugate_symmetric():
    z = np.array([[0.2, 0.1]])
    forward = spectral.partial_ft(SHIFTED, 0.8)(z)
    backward = spectral.partial_ft(SHIFTED, -0.8)(z)
    assert np.allclose(backward, np.conj(forward), rtol=1e-14, atol=0.0)


def test_partial_transform_inverts():
    z = np.array([[0.3, 0.2]])
    t = 0.35

    def integrand(lam):
        return float(np.real(np.exp(-1j * lam * t) * spectral.partial_ft(SHIFTED, lam)(z)[0]))

    value, _ = integrate.quad(integrand, -40.0, 40.0, limit=400)
    assert value / (2.0 * np.pi) == pytest.approx(SHIFTED(z, np.array([t]))[0], rel=1e-6)


def test_twisted_convolution_examples():
    gaussian = UNIT.z_factor
    direct = spectral.twisted_conv(gaussian, gaussian, 0.0)
    z = np.array([[0.5, 0.3]])
    assert direct(z)[0].real == pytest.approx(0.5 * np.pi * np.exp(-0.5 * 0.34), rel=1e-8)

    lam = 1.0
    phi0 = spectral.twisted_conv(gaussian, lambda w: laguerre.varphi(0, lam, w, 1), lam)
    assert phi0(np.zeros((1, 2)))[0].real == pytest.approx(np.pi / (1.0 + lam / 4.0), rel=1e-8)


@pytest.mark.parametrize("k", [0, 1, 2, 4])
def test_laguerre_coefficients(k):
    lam = 1.5
    closed = UNIT.laguerre_coefficient(k, lam)
    quadrature = spectral.radial_laguerre_coefficient(lambda rho: np.exp(-rho * rho), k, lam)
    assert closed == pytest.approx(quadrature, rel=1e-8)
    z = np.array([[0.4, -0.2]])
    conv = spectral.twisted_conv(UNIT.z_factor, lambda w: laguerre.varphi(k, lam, w, 1), lam)
    assert conv(z)[0].real == pytest.approx(closed * laguerre.varphi(k, lam, z[0], 1), rel=1e-7, abs=1e-12)
    assert abs(conv(z)[0].imag) <= 1e-9


def test_series_matches_the_closed_form_sum():
    mu = np.array([0.05, 0.5, 2.0, 8.0])
    z = np.array([[0.0, 0.0], [0.3, -0.4], [1.1, 0.2]])
    series, _, _, unconverged = spectral.laguerre_series(UNIT, mu, 1.0, z, tol=1e-14)
    closed = spectral.hille_hardy_series_sum(UNIT, mu, 1.0, z)
    assert not unconverged
    assert np.max(np.abs(series - closed)) <= 1e-8 * np.max(np.abs(closed))


def test_spectral_mean_at_the_centre_axis():
    # at z = 0 the twist vanishes, so A_r f(0, t) = exp(-a r^2) h(t)
    t = np.array([0.0, 0.3, -0.7])
    z = np.zeros((3, 2))
    for r in (0.5, 1.0, 2.0):
        value = spectral.spectral_spherical_mean(SHIFTED, r, (z, t)).value
        assert np.allclose(value, np.exp(-0.75 * r * r) * SHIFTED(z, t), rtol=1e-5, atol=1e-8)


def test_spectral_mean_agrees_with_quadrature():
    rule = sphere_rule(1)
    z = np.array([[0.4, -0.3], [0.9, 0.5]])
    t = np.array([0.2, -0.6])
    for f in (UNIT, SHIFTED):
        for r in (0.5, 1.0, 2.0):
            result = spectral.spectral_spherical_mean(f, r, (z, t))
            oracle = spherical_mean(f, r, z, t, rule)
            assert np.allclose(result.value, oracle, rtol=1e-3, atol=1e-4 * np.max(np.abs(oracle)))
            assert result.K_used >= 1 and result.Lambda > 0


def test_zero_radius_returns_the_function():
    x = HeisPoint([0.3, 0.1], 0.25)
    value = spectral.spectral_family_mean(SHIFTED, 0.0, x).scalar()
    assert value == pytest.approx(SHIFTED(x.z, x.t), rel=1e-6)


def test_dilation_identity_on_the_spectral_route():
    x = HeisPoint([0.4, -0.2], 0.3)
    for r in (0.5, 2.0):
        direct = spectral.spectral_spherical_mean(UNIT, r, x).scalar()
        y = dilate(1.0 / r, x)
        rescaled = spectral.spectral_spherical_mean(UNIT.dilated(r), 1.0, y).scalar()
        assert rescaled == pytest.approx(direct, rel=1e-3)


def test_derivative_mean_agrees_with_finite_differences():
    x = HeisPoint([0.4, -0.3], 0.2)
    spectral_slope = spectral.spectral_derivative_mean(UNIT, 1.0, x).scalar()
    quadrature_slope = float(derivative_mean_quadrature(UNIT, 1.0, x)[0])
    assert spectral_slope == pytest.approx(quadrature_slope, rel=1e-3)
    with pytest.raises(DomainError):
        spectral.spectral_derivative_mean(UNIT, 0.0, x)


@pytest.mark.parametrize("k", [0, 1, 5, 20, 50])
def test_derivative_coefficient(k):
    lam, delta, h = 1.2, 0.0, 1e-4
    r = np.linspace(0.2, 3.0, 8)

    def value(s):
        return laguerre.psi(k, delta, np.sqrt(lam) * s)

    def central(step):
        return (value(r + step) - value(r - step)) / (2.0 * step)

    numeric = (4.0 * central(h / 2.0) - central(h)) / 3.0
    exact = spectral.derivative_coefficient(k, delta, lam, r)
    assert np.allclose(exact, numeric, atol=1e-7 * max(1.0, np.max(np.abs(exact))))


def test_integral_identity_without_the_extra_factor():
    ident = spectral.corollary_ident_check(0.0, 1.0, 0, 1.0)
    assert ident.lhs == pytest.approx(np.exp(-0.25), rel=1e-12)
    assert ident.rhs == pytest.approx(0.778800783, rel=1e-8)
    assert spectral.corollary_ident_check(1.0, 0.5, 3, 2.0).ratio == pytest.approx(1.0, abs=1e-8)
    assert spectral.corollary_ident_check(0.0, 1.0, 0, 1.0, factor=2.0).ratio == pytest.approx(2.0, rel=1e-10)
    with pytest.raises(DomainError):
        spectral.corollary_ident_check(0.0, 0.0, 1, 1.0)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_integral_identity_grid(alpha, beta):
    for k in (0, 3, 10):
        for t in (0.5, 1.0, 2.0):
            assert abs(spectral.corollary_ident_check(alpha, beta, k, t).ratio - 1.0) <= 1e-8


def test_kernel_masses():
    for r in (0.5, 1.0, 3.0):
        assert spectral.kernel_mass(lambda s: spectral.poisson_kernel(r, s)) == pytest.approx(1.0, abs=1e-8)
        assert spectral.kernel_mass(lambda s: spectral.q_kernel(r, s)) == pytest.approx(1.0, abs=1e-8)
    for beta in (0.25, 0.5, 1.0, 2.7):
        assert spectral.k_beta_mass(beta) == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(DomainError):
        spectral.k_beta_mass(0.0)


def test_kernel_transforms():
    assert float(spectral.poisson_transform(2.0, 0.0)) == 1.0
    numeric = spectral.even_kernel_transform(lambda s: spectral.poisson_kernel(1.0, s), 4.0)
    assert numeric == pytest.approx(np.exp(-1.0), abs=1e-6)
    assert abs(spectral.k_beta_transform(2.0, 3.0)) == pytest.approx(0.1, rel=1e-14)
    one_sided = spectral.one_sided_kernel_transform(lambda s: spectral.k_beta_kernel(1.0, s), 2.0)
    assert one_sided == pytest.approx(1.0 / (1.0 - 2.0j), abs=1e-8)
    t = np.array([-1.0, 0.5, 2.0])
    assert np.allclose(spectral.k_beta_kernel(1.0, t), np.where(t > 0, np.exp(-t), 0.0))
    with pytest.raises(DomainError):
        spectral.k_beta_kernel(0.0, t)
    with pytest.raises(DomainError):
        spectral.poisson_kernel(-1.0, t)


def test_q_kernel_scaling():
    t = np.linspace(-2.0, 2.0, 9)
    assert float(spectral.q_kernel(3.0, 0.0)) == pytest.approx(8.0 / (np.pi * 3.0))
    assert np.allclose(spectral.q_kernel(3.0, t), spectral.q_kernel(1.0, t / 3.0) / 3.0)


def test_poisson_derivative_relation():
    lhs, rhs = spectral.poisson_derivative_relation(1.0, 0.75, 0.2)
    assert lhs == pytest.approx(rhs, rel=1e-6)
    _, halved = spectral.poisson_derivative_relation(1.0, 0.75, 0.2, factor=1.0)
    assert halved == pytest.approx(0.5 * rhs)


@pytest.mark.slow
def test_analytic_family_routes_agree():
    x = (np.array([[0.0, 0.0], [0.3, -0.2]]), np.array([0.0, 0.4]))
    for beta in (0.5, 1.0):
        lhs = spectral.spectral_analytic_mean(beta, UNIT, x).value
        rhs = spectral.analytic_family_mean(beta, UNIT, x).value
        assert np.allclose(lhs, rhs, rtol=1e-3, atol=1e-4 * np.max(np.abs(rhs)))
    lhs = spectral.t_beta_mean(1.0, UNIT, x).value
    rhs = spectral.t_beta_integral_mean(1.0, UNIT, x).value
    assert np.allclose(lhs, rhs, rtol=1e-3, atol=1e-4 * np.max(np.abs(rhs)))


def test_analytic_family_of_a_radial_function():
    # for f = exp(-|z|^2) the beta = 1 family at the origin is
    # int_0^1 A_{sqrt s} f(0) ds = int_0^1 exp(-s) ds
    value = spectral.analytic_family_mean(1.0, radial, HeisPoint.identity(1)).scalar()
    assert value == pytest.approx(1.0 - np.exp(-1.0), rel=1e-8)


def test_quadrature_oracle_for_t_independent_gaussian():
    rule = sphere_rule(1)
    z = np.array([[0.3, 0.4]])
    for r in (0.5, 2.0):
        exact = np.exp(-(0.25 + r * r)) * i0(2.0 * r * 0.5)
        assert spherical_mean(radial, r, z, np.zeros(1), rule)[0] == pytest.approx(exact, rel=1e-12)
        slope = -2.0 * r * exact + 2.0 * 0.5 * np.exp(-(0.25 + r * r)) * i1(2.0 * r * 0.5)
        assert derivative_mean_quadrature(radial, r, (z, np.zeros(1)), rule)[0] == \
            pytest.approx(slope, rel=1e-6)


def test_analytic_family_approaches_the_unit_sphere_mean():
    # at the origin A^beta f - A_1 f = exp(-1) sum_m beta / (m! (m + beta)) for f = exp(-|z|^2)
    gaps = []
    for beta in (1.0, 0.5, 0.25, 0.1):
        value = spectral.analytic_family_mean(beta, radial, HeisPoint.identity(1)).scalar()
        series = sum(beta / (math.factorial(m) * (m + beta)) for m in range(1, 25))
        assert value == pytest.approx(np.exp(-1.0) * (1.0 + series), rel=1e-6)
        gaps.append(value - np.exp(-1.0))
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.2 * gaps[0]
