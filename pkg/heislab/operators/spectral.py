"""
Spectral
--------
Partial Fourier transform in t, lambda-twisted convolution, and the
Laguerre-series route to the spherical means A_r, their r-derivatives B_r,
the analytic family and the modified family T_beta.

Test profiles are separable Gaussians f(z, t) = A exp(-a|z|^2) exp(-b(t-c)^2).
For them both the partial transform and the Laguerre coefficients are
closed form:

    f^lam *_lam phi_k^lam = R_k(lam) phi_k^lam,
    R_k = A sqrt(pi/b) exp(-lam^2/4b) exp(i lam c) (2 pi)^n mu^-n p^-n q^k

with mu = |lam|, p = 2a/mu + 1/2 and q = (p - 1)/p. The mean then reduces to
a one-sided cosine integral over lam of the k-series

    S(mu) = sum_k m_k(mu) q^k p^-n phi_k^lam(z)

where m_k is psi_k^delta(sqrt(mu) r) (or its r-derivative). The series is
truncated per lam-node by a rigorous tail bound using |psi_k^delta| <= 1 for
delta >= 0 and |phi_k^lam| <= binom(k+n-1, k).
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.special import gamma, gammaln, ive, jv, roots_genlaguerre, roots_jacobi, roots_legendre

from heislab.errors import DomainError
from heislab.operators.heis_core import as_arrays, twist
from heislab.operators.laguerre import LaguerreRows, gamma_ratio, psi
from heislab.operators import means

logger = logging.getLogger(__name__)

POISSON_CONSTANT = 4.0 / np.pi
Q_CONSTANT = 8.0 / np.pi


# --- test profiles -------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianProfile:
    """f(z, t) = amplitude * exp(-a|z|^2) * exp(-b (t - c)^2) on H^n"""
    a: float
    b: float
    c: float = 0.0
    n: int = 1
    amplitude: float = 1.0
    name: str = ""

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"Gaussian profile needs a, b > 0, got a={self.a}, b={self.b}")
        if self.n < 1:
            raise DomainError(f"dimension must be >= 1, got {self.n}")

    @property
    def terms(self) -> tuple:
        return (self,)

    def __call__(self, z, t):
        z = np.asarray(z, dtype=float)
        return self.amplitude * np.exp(-self.a * np.sum(z * z, axis=-1)
                                       - self.b * (np.asarray(t, dtype=float) - self.c) ** 2)

    def t_transform(self, lam):
        """int exp(i lam t) h(t) dt for the t-factor, amplitude included"""
        lam = np.asarray(lam, dtype=float)
        return (self.amplitude * np.sqrt(np.pi / self.b) * np.exp(-lam * lam / (4.0 * self.b))
                * np.exp(1j * lam * self.c))

    def z_factor(self, z):
        z = np.asarray(z, dtype=float)
        return np.exp(-self.a * np.sum(z * z, axis=-1))

    def laguerre_pq(self, mu):
        """(p, q) with exp(-a|z|^2) = p^-n sum_k q^k phi_k^lam(z)"""
        mu = np.asarray(mu, dtype=float)
        p = 2.0 * self.a / mu + 0.5
        return p, (p - 1.0) / p

    def laguerre_coefficient(self, k: int, lam: float) -> float:
        """R_k of the z-factor: exp(-a|.|^2) *_lam phi_k^lam = R_k phi_k^lam"""
        mu = abs(lam)
        p, q = self.laguerre_pq(mu)
        return float((2.0 * np.pi) ** self.n * mu ** -self.n * p ** -self.n * q ** k)

    def lambda_cutoff(self, tol: float = 1e-12) -> float:
        return float(np.sqrt(4.0 * self.b * np.log(1.0 / tol)))

    def dilated(self, r: float) -> "GaussianProfile":
        """delta_r f(w, t) = f(r w, r^2 t)"""
        if not r > 0:
            raise DomainError(f"dilation factor must be positive, got {r}")
        return GaussianProfile(self.a * r * r, self.b * r ** 4, self.c / (r * r), self.n,
                               self.amplitude, self.name)

    def translated_t(self, shift: float) -> "GaussianProfile":
        return GaussianProfile(self.a, self.b, self.c + shift, self.n, self.amplitude, self.name)


@dataclass(frozen=True)
class ProfileSum:
    """Finite linear combination of Gaussian profiles sharing n"""
    terms: tuple
    name: str = ""

    def __post_init__(self):
        if not self.terms:
            raise DomainError("ProfileSum needs at least one term")
        if len({term.n for term in self.terms}) != 1:
            raise DomainError("all profiles in a sum must share n")

    @property
    def n(self) -> int:
        return self.terms[0].n

    def __call__(self, z, t):
        return sum(term(z, t) for term in self.terms)

    def dilated(self, r: float) -> "ProfileSum":
        return ProfileSum(tuple(term.dilated(r) for term in self.terms), self.name)

    def t_transform_total(self, lam, z):
        return sum(term.t_transform(lam) * term.z_factor(z) for term in self.terms)


@dataclass(frozen=True)
class SpectralTruncation:
    K: int = 50000
    Lambda: Optional[float] = None
    n_lambda: int = 96
    n_small: int = 16
    lambda_split: float = 1.0
    tol: float = 1e-9

    def __post_init__(self):
        if self.K < 0:
            raise DomainError(f"K must be >= 0, got {self.K}")
        if self.Lambda is not None and not self.Lambda > 0:
            raise DomainError(f"Lambda must be > 0, got {self.Lambda}")
        if self.n_lambda < 2 or self.n_small < 2:
            raise DomainError("lambda quadrature needs at least 2 nodes per panel")


@dataclass(frozen=True)
class SpectralResult:
    value: np.ndarray
    tail_estimate: float
    K_used: int
    Lambda: float
    n_lambda: int
    flags: tuple = ()

    def scalar(self) -> float:
        return float(np.ravel(self.value)[0])


@dataclass
class PartialTransform:
    """z -> f^lam(z) for one real lam"""
    lam: float
    func: Callable
    provenance: str
    flags: set = field(default_factory=set)

    def __call__(self, z):
        return self.func(np.asarray(z, dtype=float))


# --- helpers -------------------------------------------------------------------------

def _gauss_panel(lo: float, hi: float, nodes: int):
    x, w = roots_legendre(nodes)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def _lambda_rule(cutoff: float, trunc: SpectralTruncation, halved: bool = False):
    """Two Gauss-Legendre panels on [0, split] and [split, cutoff]"""
    split = min(trunc.lambda_split, 0.5 * cutoff)
    n_small = max(2, trunc.n_small // 2) if halved else trunc.n_small
    n_big = max(2, trunc.n_lambda // 2) if halved else trunc.n_lambda
    x1, w1 = _gauss_panel(0.0, split, n_small)
    x2, w2 = _gauss_panel(split, cutoff, n_big)
    return np.concatenate([x1, x2]), np.concatenate([w1, w2])


def _log_binom(k, n: int):
    k = np.asarray(k, dtype=float)
    return gammaln(k + n) - gammaln(k + 1.0) - gammaln(float(n))


def _tail_bound(k, log_p, log_abs_q, n: int, mu, r: float, delta: float, derivative: bool):
    """Bound on sum_{j > k} |m_j| binom(j+n-1, j) |q|^j p^-n, vectorised over nodes"""

    def log_term(j):
        value = _log_binom(j, n) + j * log_abs_q - n * log_p
        if derivative:
            value = value + np.log(0.5 * mu * r + j * mu * r / (delta + 1.0))
        return value

    with np.errstate(invalid="ignore", divide="ignore"):
        first = log_term(k + 1)
        ratio = np.exp(log_term(k + 2) - first)
        bound = np.where(ratio < 1.0, np.exp(first) / (1.0 - ratio), np.inf)
    return np.where(np.isneginf(log_abs_q), 0.0, bound)


def _series_bound(p, q, n: int) -> np.ndarray:
    """p^-n sum_k binom(k+n-1,k) |q|^k, summed until the terms are negligible"""
    total = np.zeros_like(p)
    term_q = np.ones_like(p)
    aq = np.abs(q)
    for k in range(100000):
        term = np.exp(_log_binom(k, n)) * term_q
        total += term
        term_q = term_q * aq
        if np.all(term < 1e-16 * total):
            break
    return total * p ** -n


def laguerre_series(profile: GaussianProfile, mu, r: float, z, delta: Optional[float] = None,
                    derivative: bool = False, K: int = 50000, tol=1e-12):
    """
    S(mu) = sum_k m_k q^k p^-n phi_k^lam(z) for every mu-node (rows) and
    every point z (columns). m_k = psi_k^delta(sqrt(mu) r), or its
    r-derivative when ``derivative`` is set. ``tol`` may be per node.
    Returns (S, K_used, tail, unconverged) with tail the per-node bound left.
    """
    n = profile.n
    delta = float(n - 1) if delta is None else float(delta)
    if delta < 0:
        raise DomainError("the k-series tail bound needs delta >= 0")
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    z = np.atleast_2d(np.asarray(z, dtype=float))
    p, q = profile.laguerre_pq(mu)
    log_p = np.log(p)
    with np.errstate(divide="ignore"):
        log_abs_q = np.log(np.abs(q))
    tol = np.broadcast_to(np.asarray(tol, dtype=float), mu.shape)

    x_psi = 0.5 * mu * r * r
    y_phi = 0.5 * mu[:, None] * np.sum(z * z, axis=-1)[None, :]
    psi_rows = LaguerreRows(delta, x_psi, -0.5 * x_psi)
    phi_rows = LaguerreRows(float(n - 1), y_phi, -0.5 * y_phi)
    lag_rows = LaguerreRows(delta + 1.0, x_psi, -0.5 * x_psi) if derivative else None

    total = np.zeros((mu.size, z.shape[0]))
    tail = np.zeros(mu.size)
    active = np.arange(mu.size)
    coef = p ** -n
    binom = 1.0
    k = 0
    while True:
        psi_k = psi_rows.values()
        if derivative:
            mu_a = mu[active]
            multiplier = -0.5 * mu_a * r * psi_k
            if k:
                multiplier = multiplier - k * mu_a * r / (delta + 1.0) * lag_rows.values()
        else:
            multiplier = psi_k
        phi_k = binom * phi_rows.values()
        total[active] += (multiplier * coef)[:, None] * phi_k

        if k % 8 == 7 or k >= K:
            bound = _tail_bound(k, log_p[active], log_abs_q[active], n, mu[active], r, delta, derivative)
            done = bound <= tol[active]
            if k >= K:
                tail[active] = bound
                break
            if np.any(done):
                tail[active[done]] = bound[done]
                keep = ~done
                active = active[keep]
                if active.size == 0:
                    break
                psi_rows.keep(keep)
                phi_rows.keep(keep)
                if derivative:
                    lag_rows.keep(keep)
                coef = coef[keep]
        if derivative and k:
            lag_rows.advance()
        psi_rows.advance()
        phi_rows.advance()
        coef = coef * q[active]
        k += 1
        binom = binom * (k + n - 1) / k
    unconverged = bool(active.size) and k >= K and np.any(tail[active] > tol[active])
    return total, k, tail, unconverged


def hille_hardy_series_sum(profile: GaussianProfile, mu, r: float, z) -> np.ndarray:
    """
    Closed form of the full series for delta = n-1:
    Gamma(n) exp(-a(r^2 + |z|^2)) G(u), u = r^2 |z|^2 (4a^2 - mu^2/4) / 4,
    with G(u) = u^(-nu/2) I_nu(2 sqrt u) (J_nu for u < 0), nu = n - 1.
    """
    n = profile.n
    order = n - 1.0
    mu = np.atleast_1d(np.asarray(mu, dtype=float))[:, None]
    z = np.atleast_2d(np.asarray(z, dtype=float))
    rho2 = np.sum(z * z, axis=-1)[None, :]
    u = 0.25 * r * r * rho2 * (4.0 * profile.a ** 2 - 0.25 * mu * mu)
    damping = -profile.a * (r * r + rho2)
    arg = 2.0 * np.sqrt(np.abs(u))
    small = np.abs(u) < 1e-14
    safe_u = np.where(small, 1.0, np.abs(u))
    safe_arg = np.where(small, 1.0, arg)
    with np.errstate(over="ignore", invalid="ignore"):
        grow = ive(order, safe_arg) * np.exp(damping + safe_arg) * safe_u ** (-0.5 * order)
        wave = jv(order, safe_arg) * np.exp(damping) * safe_u ** (-0.5 * order)
    value = np.where(u > 0, grow, wave)
    value = np.where(small, np.exp(damping) / gamma(order + 1.0), value)
    return gamma(float(n)) * value


# --- partial transform and twisted convolution -----------------------------------------------

def partial_ft(f, lam: float, t_half: float = 8.0, nodes: int = 96, tol: float = 1e-8) -> PartialTransform:
    """
    f^lam(z) = int exp(i lam t) f(z, t) dt. Gaussian profiles use the closed
    form; other fields use Gauss-Legendre on [-t_half, t_half] with a
    halved-rule comparison that flags unconverged results.
    """
    if isinstance(f, (GaussianProfile, ProfileSum)):
        terms = f.terms

        def closed(z):
            return sum(term.t_transform(lam) * term.z_factor(z) for term in terms)

        return PartialTransform(lam, closed, "closed-form")

    if isinstance(f, means.SampledField):
        t_half = f.grid.region.half_widths[-1]
    transform = PartialTransform(lam, None, "quadrature")

    def by_quadrature(z):
        z = np.atleast_2d(z)

        def rule(m):
            t, w = _gauss_panel(-t_half, t_half, m)
            values = f(z[:, None, :], t[None, :])
            return np.sum(values * np.exp(1j * lam * t)[None, :] * w[None, :], axis=1)

        fine, coarse = rule(nodes), rule(nodes // 2)
        scale = max(1.0, float(np.max(np.abs(fine))))
        if np.max(np.abs(fine - coarse)) > tol * scale:
            transform.flags.add("lambda-quadrature-unconverged")
            logger.warning("partial transform at lambda=%g did not settle", lam)
        return fine

    transform.func = by_quadrature
    return transform


@dataclass
class TwistedConvolution:
    """z -> (F *_lam G)(z) = int F(z - w) G(w) exp(i lam/2 Im z.conj(w)) dw"""
    F: Callable
    G: Callable
    lam: float
    n: int
    half_width: float = 6.0
    nodes: int = 48
    boundary_tol: float = 1e-8
    flags: set = field(default_factory=set)

    def _grid(self):
        x, w = _gauss_panel(-self.half_width, self.half_width, self.nodes)
        mesh = np.meshgrid(*([x] * (2 * self.n)), indexing="ij")
        weights = np.meshgrid(*([w] * (2 * self.n)), indexing="ij")
        nodes = np.stack([m.reshape(-1) for m in mesh], axis=-1)
        weight = np.prod(np.stack([m.reshape(-1) for m in weights], axis=-1), axis=-1)
        return nodes, weight

    def __call__(self, z):
        z = np.atleast_2d(np.asarray(z, dtype=float))
        w_nodes, weight = self._grid()
        edge = np.any(np.abs(w_nodes) > 0.9 * self.half_width, axis=-1)
        out = np.empty(z.shape[0], dtype=complex)
        for i, zi in enumerate(z):
            integrand = (self.F(zi[None, :] - w_nodes) * self.G(w_nodes)
                         * np.exp(0.5j * self.lam * twist(zi[None, :], w_nodes)))
            mass = np.abs(integrand) * weight
            if mass[edge].sum() > self.boundary_tol * max(mass.sum(), 1e-300):
                self.flags.add("boundary-mass")
            out[i] = np.sum(integrand * weight)
        if "boundary-mass" in self.flags:
            logger.warning("twisted convolution box of half-width %g leaks mass", self.half_width)
        return out


def twisted_conv(F: Callable, G: Callable, lam: float, n: int = 1, half_width: float = 6.0,
                 nodes: Optional[int] = None) -> TwistedConvolution:
    nodes = nodes or (48 if n == 1 else 20)
    return TwistedConvolution(F, G, lam, n, half_width, nodes)


def radial_laguerre_coefficient(g: Callable, k: int, lam: float, n: int = 1) -> float:
    """
    R_k with g *_lam phi_k^lam = R_k phi_k^lam for a radial g(rho), from
    R_k = binom(k+n-1, k)^-1 |S^{2n-1}| int_0^inf g(rho) phi_k^lam(rho) rho^(2n-1) d rho.
    """
    if lam == 0:
        raise DomainError("Laguerre coefficients need lambda != 0")
    mu = abs(lam)
    sphere_area = 2.0 * np.pi ** n / gamma(n)
    binom = 1.0 / gamma_ratio(k, n - 1)

    def integrand(rho):
        return g(rho) * binom * psi(k, n - 1, np.sqrt(mu) * rho) * rho ** (2 * n - 1)

    value, _ = integrate.quad(integrand, 0.0, np.inf, limit=400)
    return float(sphere_area * value / binom)


# --- spectral family -----------------------------------------------------------------------

def _family_term(profile: GaussianProfile, r: float, z, t, delta: float, trunc: SpectralTruncation,
                 derivative: bool, multiplier: Optional[Callable], halved: bool = False):
    cutoff = trunc.Lambda or profile.lambda_cutoff()
    lam, w = _lambda_rule(cutoff, trunc, halved)
    envelope = profile.amplitude * np.sqrt(np.pi / profile.b) * np.exp(-lam * lam / (4.0 * profile.b)) / np.pi
    node_tol = trunc.tol / (lam.size * np.maximum(w * envelope, 1e-300))
    series, k_used, tail, unconverged = laguerre_series(
        profile, lam, r, z, delta, derivative, trunc.K, node_tol)
    phase = np.exp(-1j * lam[:, None] * (t[None, :] - profile.c))
    if multiplier is not None:
        phase = phase * multiplier(lam)[:, None]
    value = np.real(np.sum((w * envelope)[:, None] * phase * series, axis=0))

    p, q = profile.laguerre_pq(np.array([cutoff]))
    bound = float(_series_bound(p, q, profile.n)[0])
    if derivative:
        bound *= cutoff * r * (0.5 + trunc.K / (delta + 1.0))
    lambda_tail = profile.amplitude * 0.5 * np.exp(-cutoff ** 2 / (4.0 * profile.b)) * bound
    tail_total = float(np.sum(w * envelope * tail)) + float(lambda_tail)
    return value, k_used, tail_total, unconverged


def spectral_family_mean(f, r: float, x, delta: Optional[float] = None,
                         trunc: Optional[SpectralTruncation] = None, derivative: bool = False,
                         multiplier: Optional[Callable] = None) -> SpectralResult:
    """
    (1/pi) Re int_0^Lambda exp(-i lam (t - c)) m(lam) f^lam-weight S(lam) d lam
    summed over the profile terms, where S uses psi_k^delta(sqrt(|lam|) r).
    delta = n - 1 gives A_r, delta = beta + n - 1 with r = 1 the analytic family.
    """
    trunc = trunc or SpectralTruncation()
    if not r >= 0:
        raise DomainError(f"radius must be nonnegative, got {r}")
    z, t = as_arrays(x)
    terms = f.terms
    n = terms[0].n
    if z.shape[-1] != 2 * n:
        raise DomainError(f"points have dimension {z.shape[-1] // 2}, profile has n={n}")
    delta = float(n - 1) if delta is None else float(delta)

    value = np.zeros(z.shape[0])
    check = np.zeros(z.shape[0])
    tail_total, k_max_used, flags = 0.0, 0, set()
    cutoff = trunc.Lambda or max(term.lambda_cutoff() for term in terms)
    for term in terms:
        part, k_used, tail, unconverged = _family_term(term, r, z, t, delta, trunc, derivative, multiplier)
        coarse, _, _, _ = _family_term(term, r, z, t, delta, trunc, derivative, multiplier, halved=True)
        value += part
        check += coarse
        tail_total += tail
        k_max_used = max(k_max_used, k_used)
        if unconverged:
            flags.add("k-sum-unconverged")
    scale = max(1.0, float(np.max(np.abs(value))))
    if np.max(np.abs(value - check)) > 1e3 * trunc.tol * scale:
        flags.add("lambda-quadrature-unconverged")
    for flag in sorted(flags):
        logger.warning("spectral evaluation flagged %s (r=%g, delta=%g)", flag, r, delta)
    logger.debug("spectral family r=%g delta=%g used K=%d, tail %.3g", r, delta, k_max_used, tail_total)
    return SpectralResult(value, tail_total, k_max_used, cutoff, trunc.n_lambda, tuple(sorted(flags)))


def spectral_spherical_mean(f, r: float, x, trunc: Optional[SpectralTruncation] = None) -> SpectralResult:
    return spectral_family_mean(f, r, x, None, trunc)


def spectral_derivative_mean(f, r: float, x, trunc: Optional[SpectralTruncation] = None) -> SpectralResult:
    """B_r f = d/dr A_r f through the derivative of the Laguerre multiplier"""
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r}")
    return spectral_family_mean(f, r, x, None, trunc, derivative=True)


def spectral_analytic_mean(beta: float, f, x, trunc: Optional[SpectralTruncation] = None) -> SpectralResult:
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    return spectral_family_mean(f, 1.0, x, beta + f.terms[0].n - 1.0, trunc)


def t_beta_mean(beta: float, f, x, trunc: Optional[SpectralTruncation] = None) -> SpectralResult:
    """T_beta f = A^beta (f *_t k_beta), multiplier (1 - i lam)^-beta on the analytic family"""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    return spectral_family_mean(f, 1.0, x, beta + f.terms[0].n - 1.0, trunc,
                                multiplier=lambda lam: k_beta_transform(beta, lam))


def derivative_coefficient(k: int, delta: float, lam: float, r):
    """d/dr psi_k^delta(sqrt|lam| r) = -(mu r/2) psi_k^delta - (k mu r/(delta+1)) psi_{k-1}^{delta+1}"""
    mu = abs(lam)
    s = np.sqrt(mu) * np.asarray(r, dtype=float)
    value = -0.5 * mu * r * psi(k, delta, s)
    if k:
        value = value - k * mu * r / (delta + 1.0) * psi(k - 1, delta + 1.0, s)
    return value


# --- kernels -------------------------------------------------------------------------------

def _check_radius(r: float):
    if not r > 0:
        raise DomainError(f"kernel scale must be positive, got {r}")


def poisson_kernel(r: float, t):
    """p_r(t) = (4/pi) r / (r^2 + 16 t^2), unit mass"""
    _check_radius(r)
    t = np.asarray(t, dtype=float)
    return POISSON_CONSTANT * r / (r * r + 16.0 * t * t)


def poisson_transform(r: float, lam):
    _check_radius(r)
    return np.exp(-r * np.abs(np.asarray(lam, dtype=float)) / 4.0)


def q_kernel(r: float, t):
    """q_r(t) = (8/pi) r^3 / (r^2 + 16 t^2)^2, unit mass"""
    _check_radius(r)
    t = np.asarray(t, dtype=float)
    return Q_CONSTANT * r ** 3 / (r * r + 16.0 * t * t) ** 2


def k_beta_kernel(beta: float, t):
    """k_beta(t) = t_+^(beta-1) exp(-t) / Gamma(beta)"""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    t = np.asarray(t, dtype=float)
    positive = t > 0
    safe = np.where(positive, t, 1.0)
    return np.where(positive, safe ** (beta - 1.0) * np.exp(-safe) / gamma(beta), 0.0)


def k_beta_transform(beta: float, lam):
    """(1 - i lam)^-beta on the principal branch"""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    return np.power(1.0 - 1j * np.asarray(lam, dtype=float), -beta)


def kernel_mass(kernel: Callable, lower: float = -np.inf, upper: float = np.inf) -> float:
    value, _ = integrate.quad(kernel, lower, upper, limit=400, epsabs=1e-13, epsrel=1e-12)
    return float(value)


def k_beta_mass(beta: float) -> float:
    """int k_beta, the t^(beta-1) factor near 0 carried by an algebraic quadrature weight"""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    head, _ = integrate.quad(lambda s: np.exp(-s) / gamma(beta), 0.0, 1.0, weight="alg",
                             wvar=(beta - 1.0, 0.0), epsabs=1e-13, epsrel=1e-12)
    return float(head) + kernel_mass(lambda s: k_beta_kernel(beta, s), 1.0, np.inf)


def even_kernel_transform(kernel: Callable, lam: float) -> float:
    """int exp(i lam t) k(t) dt for an even kernel, by a Fourier-weighted quadrature"""
    if lam == 0:
        return 2.0 * kernel_mass(kernel, 0.0, np.inf)
    value, _ = integrate.quad(kernel, 0.0, np.inf, weight="cos", wvar=abs(lam), limlst=200)
    return float(2.0 * value)


def one_sided_kernel_transform(kernel: Callable, lam: float) -> complex:
    """int_0^inf exp(i lam t) k(t) dt"""
    if lam == 0:
        return complex(kernel_mass(kernel, 0.0, np.inf))
    real, _ = integrate.quad(kernel, 0.0, np.inf, weight="cos", wvar=lam, limlst=200)
    imag, _ = integrate.quad(kernel, 0.0, np.inf, weight="sin", wvar=lam, limlst=200)
    return complex(real, imag)


def poisson_derivative_relation(u: float, a: float, t: float, h: float = 1e-5, factor: float = 2.0):
    """
    Both sides of d/du p_{u^2 a}(t) = (factor/u)(p_{u^2 a}(t) - q_{u^2 a}(t)),
    the left side by a Richardson central difference.
    """

    def p_at(v):
        return float(poisson_kernel(v * v * a, t))

    def central(step):
        return (p_at(u + step) - p_at(u - step)) / (2.0 * step)

    lhs = (4.0 * central(h / 2.0) - central(h)) / 3.0
    s = u * u * a
    rhs = factor / u * (float(poisson_kernel(s, t)) - float(q_kernel(s, t)))
    return lhs, rhs


# --- integral routes -------------------------------------------------------------------------

@dataclass(frozen=True)
class CorollaryIdent:
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.rhs / self.lhs


def corollary_ident_check(alpha: float, beta: float, k: int, t: float, factor: float = 1.0) -> CorollaryIdent:
    """
    psi_k^(alpha+beta)(t) against
    factor * Gamma(alpha+beta+1)/(Gamma(beta)Gamma(alpha+1))
           * int_0^1 s^alpha (1-s)^(beta-1) psi_k^alpha(t sqrt s) exp(-t^2 (1-s)/4) ds.
    The integrand is a degree-k polynomial in s times the Jacobi weight, so a
    Gauss-Jacobi rule with k + 8 nodes is exact up to rounding.
    """
    if not alpha > -1:
        raise DomainError(f"alpha must be > -1, got {alpha}")
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    x, w = roots_jacobi(k + 8, beta - 1.0, alpha)
    s = 0.5 * (1.0 + x)
    integrand = psi(k, alpha, t * np.sqrt(s)) * np.exp(-t * t * (1.0 - s) / 4.0)
    integral = 2.0 ** -(alpha + beta) * np.sum(w * integrand)
    constant = np.exp(gammaln(alpha + beta + 1.0) - gammaln(beta) - gammaln(alpha + 1.0))
    return CorollaryIdent(float(psi(k, alpha + beta, t)), float(factor * constant * integral))


def poisson_smoothed_mean(f: Callable, r: float, u: float, z, t, rule, theta_nodes: int = 64):
    """P_u A_r f(z, t) = (1/pi) int_{-pi/2}^{pi/2} A_r f(z, t - (u/4) tan theta) d theta"""
    theta, w = _gauss_panel(-0.5 * np.pi, 0.5 * np.pi, theta_nodes)
    shifts = 0.25 * u * np.tan(theta)
    z = np.atleast_2d(z)
    t = np.atleast_1d(t)
    zz = np.repeat(z[:, None, :], theta.size, axis=1)
    tt = t[:, None] - shifts[None, :]
    values = means.spherical_mean(f, r, zz, tt, rule)
    return np.sum(values * w[None, :], axis=1) / np.pi


def analytic_family_mean(beta: float, f: Callable, x, r_nodes: int = 24, rule=None,
                         theta_nodes: int = 64, n: Optional[int] = None) -> SpectralResult:
    """
    A^beta f = Gamma(beta+n)/(Gamma(beta)Gamma(n)) int_0^1 s^(n-1) (1-s)^(beta-1) P_{1-s} A_{sqrt s} f ds
    by Gauss-Jacobi in s, which absorbs the endpoint singularity for beta < 1.
    """
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    z, t = as_arrays(x)
    n = n or z.shape[-1] // 2
    rule = rule or means.sphere_rule(n)
    nodes, weights = roots_jacobi(r_nodes, beta - 1.0, n - 1.0)
    s = 0.5 * (1.0 + nodes)
    constant = np.exp(gammaln(beta + n) - gammaln(beta) - gammaln(float(n))) * 2.0 ** -(beta + n - 1.0)
    total = np.zeros(z.shape[0])
    for s_i, w_i in zip(s, weights):
        total += w_i * poisson_smoothed_mean(f, np.sqrt(s_i), 1.0 - s_i, z, t, rule, theta_nodes)
    coarse_nodes, coarse_weights = roots_jacobi(max(2, r_nodes // 2), beta - 1.0, n - 1.0)
    coarse = np.zeros(z.shape[0])
    for s_i, w_i in zip(0.5 * (1.0 + coarse_nodes), coarse_weights):
        coarse += w_i * poisson_smoothed_mean(f, np.sqrt(s_i), 1.0 - s_i, z, t, rule, theta_nodes)
    value = constant * total
    estimate = float(np.max(np.abs(value - constant * coarse)))
    flags = ("r-quadrature-unconverged",) if estimate > 1e-4 * max(1.0, float(np.max(np.abs(value)))) else ()
    if flags:
        logger.warning("analytic family quadrature for beta=%g moved by %.3g on halving", beta, estimate)
    return SpectralResult(value, estimate, r_nodes, 0.0, theta_nodes, flags)


@dataclass(frozen=True)
class KBetaSmoothed:
    """(f *_t k_beta)(z, t) = int_0^inf f(z, t - s) k_beta(s) ds by generalised Gauss-Laguerre"""
    f: Callable
    beta: float
    nodes: int = 40

    def __call__(self, z, t):
        s, w = roots_genlaguerre(self.nodes, self.beta - 1.0)
        t = np.asarray(t, dtype=float)
        total = 0.0
        for s_i, w_i in zip(s, w):
            total = total + w_i * self.f(z, t - s_i)
        return total / gamma(self.beta)


def t_beta_integral_mean(beta: float, f: Callable, x, r_nodes: int = 24, rule=None,
                         theta_nodes: int = 64, smoothing_nodes: int = 40) -> SpectralResult:
    return analytic_family_mean(beta, KBetaSmoothed(f, beta, smoothing_nodes), x, r_nodes, rule, theta_nodes)
