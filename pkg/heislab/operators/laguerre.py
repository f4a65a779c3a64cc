"""
Laguerre
--------
Laguerre polynomials of type delta and the three normalisations built on them:

- psi_k^d(r)   = gamma_ratio(k, d) L_k^d(r^2/2) exp(-r^2/4)      (normalised)
- SL_k^d(r)    = gamma_ratio(k, d)^(1/2) L_k^d(r) exp(-r/2) r^(d/2)  (standard)
- phi_k^lam(z) = L_k^(n-1)(|lam||z|^2/2) exp(-|lam||z|^2/4)

All of them are driven by one upward recurrence for the normalised
polynomial l_k = gamma_ratio(k, d) L_k^d, which stays O(1) in the
oscillatory range. Rows are rescaled per element when they grow and the
exponential damping is applied in log space, so very large arguments
underflow to 0 (flagged) instead of producing inf * 0.

Also here: the four-regime envelope for SL_k^d with its certification
scan, and the uniform and weighted sup scans of psi_k^d(sqrt(lam)).
"""

import logging
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gamma, gammaln, poch, roots_genlaguerre

from heislab.errors import DomainError

logger = logging.getLogger(__name__)

_RESCALE = 1e150
_LOG_RESCALE = np.log(_RESCALE)
_LOG_TINY = -708.0

REGIME_SMALL = "small"
REGIME_OSCILLATORY = "oscillatory"
REGIME_TURNING = "turning"
REGIME_EXPONENTIAL = "exponential"


def _check_delta(delta: float):
    if not delta > -1:
        raise DomainError(f"Laguerre type must satisfy delta > -1, got {delta}")


@dataclass(frozen=True)
class LaguerreParams:
    k: int
    delta: float
    argument: float = 0.0

    def __post_init__(self):
        if self.k < 0:
            raise DomainError(f"degree must be nonnegative, got {self.k}")
        _check_delta(self.delta)
        if self.argument < 0:
            raise DomainError(f"argument must be nonnegative, got {self.argument}")


@dataclass(frozen=True)
class EnvelopeRegime:
    tag: str
    lower: float
    upper: float

    def contains(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return (r >= self.lower) & (r < self.upper)


def gamma_ratio(k, delta: float):
    """Gamma(k+1) Gamma(delta+1) / Gamma(k+delta+1) without overflow"""
    _check_delta(delta)
    k = np.asarray(k, dtype=float)
    value = gamma(delta + 1.0) / poch(k + 1.0, delta)
    return float(value) if value.ndim == 0 else value


def log_gamma_ratio(k, delta: float):
    k = np.asarray(k, dtype=float)
    return gammaln(k + 1.0) + gammaln(delta + 1.0) - gammaln(k + delta + 1.0)


class LaguerreRows:
    """
    Upward recurrence for l_k(x) = gamma_ratio(k, d) L_k^d(x):

        l_0 = 1,  l_1 = (1 + d - x) / (1 + d)
        l_{k+1} = ((2k + 1 + d - x) l_k - k l_{k-1}) / (k + d + 1)

    stepped in the difference form l_{k+1} = l_k + (k (l_k - l_{k-1}) - x l_k) / (k + d + 1),
    which keeps l_k(0) = 1 exact.

    ``values()`` returns l_k(x) * exp(log_factor) for the current k, where
    log_factor is fixed per element at construction. State lives in
    mantissa arrays plus a per-element log scale.
    """

    def __init__(self, delta: float, x, log_factor=0.0):
        _check_delta(delta)
        self.delta = float(delta)
        self.x = np.array(x, dtype=float)
        self.log_factor = np.broadcast_to(np.asarray(log_factor, dtype=float), self.x.shape).copy()
        self.k = 0
        self._prev = np.zeros_like(self.x)
        self._cur = np.ones_like(self.x)
        self._log_scale = np.zeros_like(self.x)
        self.underflow = False

    def advance(self):
        k = self.k
        step = k * (self._cur - self._prev) if k else 0.0
        nxt = self._cur + (step - self.x * self._cur) / (k + self.delta + 1.0)
        self._prev, self._cur = self._cur, nxt
        self.k += 1
        big = np.abs(self._cur) > _RESCALE
        if np.any(big):
            self._cur[big] /= _RESCALE
            self._prev[big] /= _RESCALE
            self._log_scale[big] += _LOG_RESCALE

    def values(self) -> np.ndarray:
        log_size = self._log_scale + self.log_factor
        with np.errstate(divide="ignore"):
            magnitude = log_size + np.log(np.abs(self._cur))
        lost = (magnitude < _LOG_TINY) & (self._cur != 0)
        if np.any(lost):
            self.underflow = True
        with np.errstate(over="ignore", under="ignore"):
            out = self._cur * np.exp(np.clip(log_size, None, 700.0))
        return np.where(lost, 0.0, out)

    def keep(self, mask):
        """Drop the elements where ``mask`` is False"""
        mask = np.asarray(mask, dtype=bool)
        self.x = self.x[mask]
        self.log_factor = self.log_factor[mask]
        self._prev = self._prev[mask]
        self._cur = self._cur[mask]
        self._log_scale = self._log_scale[mask]


def _iter_rows(k_max: int, rows: LaguerreRows, flags: Optional[set]) -> Iterator:
    for k in range(k_max + 1):
        if k:
            rows.advance()
        yield k, rows.values()
    if rows.underflow and flags is not None:
        flags.add("underflow")


def iter_psi(k_max: int, delta: float, r, flags: Optional[set] = None) -> Iterator:
    """Yield (k, psi_k^delta(r)) for k = 0 .. k_max"""
    r = np.asarray(r, dtype=float)
    x = 0.5 * r * r
    return _iter_rows(k_max, LaguerreRows(delta, x, -0.5 * x), flags)


def iter_std_laguerre(k_max: int, delta: float, r, flags: Optional[set] = None) -> Iterator:
    """Yield (k, SL_k^delta(r)) for k = 0 .. k_max; r must be positive"""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("standard Laguerre functions need r > 0")
    rows = LaguerreRows(delta, r, -0.5 * r + 0.5 * delta * np.log(r))
    for k, values in _iter_rows(k_max, rows, flags):
        yield k, values * np.exp(-0.5 * log_gamma_ratio(k, delta))


def _row(iterator, k: int):
    for j, values in iterator:
        if j == k:
            return values
    raise DomainError(f"degree must be nonnegative, got {k}")


def laguerre_poly(k: int, delta: float, x):
    """L_k^delta(x) through the normalised recurrence"""
    _check_delta(delta)
    if k < 0:
        raise DomainError(f"degree must be nonnegative, got {k}")
    x = np.asarray(x, dtype=float)
    rows = LaguerreRows(delta, x, -log_gamma_ratio(k, delta))
    value = _row(_iter_rows(k, rows, None), k)
    return float(value) if value.ndim == 0 else value


def psi(k: int, delta: float, r):
    if k < 0:
        raise DomainError(f"degree must be nonnegative, got {k}")
    value = _row(iter_psi(k, delta, r), k)
    return float(value) if value.ndim == 0 else value


def std_laguerre(k: int, delta: float, r):
    if k < 0:
        raise DomainError(f"degree must be nonnegative, got {k}")
    value = _row(iter_std_laguerre(k, delta, r), k)
    return float(value) if value.ndim == 0 else value


def psi_from_standard(k: int, delta: float, r, two_power: Optional[float] = None):
    """
    psi_k^d(r) rebuilt from the standard function:
    2^(d/2) gamma_ratio^(1/2) r^(-d) SL_k^d(r^2/2).
    ``two_power`` overrides the exponent of 2 (d/2 when None).
    """
    r = np.asarray(r, dtype=float)
    power = 0.5 * delta if two_power is None else two_power
    value = (2.0 ** power * np.sqrt(gamma_ratio(k, delta)) * r ** (-delta)
             * std_laguerre(k, delta, 0.5 * r * r))
    return float(value) if np.ndim(value) == 0 else value


def standard_gram(delta: float, k_max: int, nodes: int = 64) -> np.ndarray:
    """
    Gram matrix of SL_0^d .. SL_k_max^d in L^2((0, inf), dr) by Gauss-Laguerre
    quadrature of weight r^d e^(-r), exact for k_max < nodes. With the
    gamma_ratio normalisation above the diagonal is Gamma(d + 1).
    """
    _check_delta(delta)
    if k_max >= nodes:
        raise DomainError(f"{nodes} nodes integrate degrees below {nodes} only, got k_max={k_max}")
    x, w = roots_genlaguerre(nodes, delta)
    rows = np.array([np.sqrt(gamma_ratio(k, delta)) * laguerre_poly(k, delta, x) for k in range(k_max + 1)])
    return (rows * w) @ rows.T


def varphi(k: int, lam: float, z, n: Optional[int] = None):
    """phi_k^lam(z) for z of shape (..., 2n)"""
    if lam == 0:
        raise DomainError("phi_k^lambda needs lambda != 0")
    z = np.asarray(z, dtype=float)
    n = n or z.shape[-1] // 2
    radius = np.sqrt(abs(lam) * np.sum(z * z, axis=-1))
    binom = 1.0 / gamma_ratio(k, n - 1)
    value = binom * psi(k, n - 1, radius)
    return float(value) if np.ndim(value) == 0 else value


# --- envelopes ------------------------------------------------------------------

def turning_scale(k, delta: float, scale: str = "nu"):
    """The scale the envelope regimes are measured in: nu = 4k + 2d + 2, or k itself"""
    if scale == "nu":
        return 4.0 * np.asarray(k, dtype=float) + 2.0 * delta + 2.0
    if scale == "k":
        return np.asarray(k, dtype=float)
    raise DomainError(f"unknown envelope scale {scale!r}")


def envelope_regimes(k: int, delta: float, scale: str = "nu") -> tuple:
    if k < 1:
        raise DomainError("envelope regimes need k >= 1")
    s = float(turning_scale(k, delta, scale))
    return (
        EnvelopeRegime(REGIME_SMALL, 0.0, 1.0 / s),
        EnvelopeRegime(REGIME_OSCILLATORY, 1.0 / s, s / 2.0),
        EnvelopeRegime(REGIME_TURNING, s / 2.0, 1.5 * s),
        EnvelopeRegime(REGIME_EXPONENTIAL, 1.5 * s, np.inf),
    )


def envelope_T(k: int, delta: float, r, gamma_rate: float = 0.1, scale: str = "nu"):
    """Raw four-regime majorant of |SL_k^delta(r)|, no constant attached"""
    if k < 1:
        raise DomainError("envelope regimes need k >= 1")
    r = np.asarray(r, dtype=float)
    s = float(turning_scale(k, delta, scale))
    with np.errstate(divide="ignore", invalid="ignore"):
        small = (s * r) ** (0.5 * delta)
        oscillatory = (s * r) ** -0.25
        turning = s ** -0.25 * (s ** (1.0 / 3.0) + np.abs(s - r)) ** -0.25
        exponential = np.exp(-gamma_rate * r)
    value = np.select(
        [r < 1.0 / s, r < s / 2.0, r < 1.5 * s],
        [small, oscillatory, turning],
        default=exponential,
    )
    return float(value) if value.ndim == 0 else value


def _envelope_grid(delta: float, k_max: int, samples: int, scale: str) -> np.ndarray:
    s_max = float(turning_scale(k_max, delta, scale))
    return np.geomspace(1e-3 / s_max, 3.0 * s_max + 40.0, samples)


def fit_gamma(delta: float, k_max: int = 50, samples: int = 2001, scale: str = "nu",
              margin: float = 0.9) -> float:
    """
    ``margin`` times the largest rate g with |SL_k^delta(r)| <= exp(-g r) on
    every exponential-regime sample of a reference grid, k = 1 .. k_max.
    Under the k scale the fitted rate drifts to 0 as k_max grows.
    """
    r = _envelope_grid(delta, k_max, samples, scale)
    rate = np.inf
    for k, values in iter_std_laguerre(k_max, delta, r):
        if k == 0:
            continue
        tail = r >= 1.5 * float(turning_scale(k, delta, scale))
        magnitude = np.abs(values[tail])
        if not np.any(magnitude > 0):
            continue
        local = -np.log(magnitude[magnitude > 0]) / r[tail][magnitude > 0]
        rate = min(rate, float(local.min()))
    rate = max(margin * rate, 1e-6) if np.isfinite(rate) else 1e-6
    logger.debug("fitted exponential rate %.6g for delta=%g (scale=%s)", rate, delta, scale)
    return rate


@dataclass(frozen=True)
class EnvelopeCertificate:
    delta: float
    k_max: int
    samples: int
    gamma_rate: float
    constant: float
    worst_k: int
    worst_r: float
    worst_regime: str
    scale: str
    flags: tuple = ()


def _regime_of(k: int, delta: float, r: float, scale: str) -> str:
    for regime in envelope_regimes(k, delta, scale):
        if regime.contains(r):
            return regime.tag
    return REGIME_EXPONENTIAL


def certify_envelope(delta: float, k_max: int, samples: int, gamma_rate: Optional[float] = None,
                     scale: str = "nu", polish: int = 12) -> EnvelopeCertificate:
    """
    C* = max over k = 1 .. k_max and ``samples`` log-spaced r of
    |SL_k^delta(r)| / envelope_T. The exponential rate is fitted once on a
    fixed reference grid, then held fixed while C* is measured. The largest
    candidates are polished with a bounded scalar search between their
    neighbouring samples.
    """
    _check_delta(delta)
    if k_max < 1:
        raise DomainError("envelope certification needs k_max >= 1")
    if gamma_rate is None:
        gamma_rate = fit_gamma(delta, k_max, scale=scale)
    r = _envelope_grid(delta, k_max, samples, scale)
    flags = set()
    candidates = []
    for k, values in iter_std_laguerre(k_max, delta, r, flags):
        if k == 0:
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(values == 0, 0.0,
                             np.abs(values) / envelope_T(k, delta, r, gamma_rate, scale))
        if not np.all(np.isfinite(ratio)):
            flags.add("overflow")
            ratio = np.where(np.isfinite(ratio), ratio, 0.0)
        i = int(np.argmax(ratio))
        candidates.append((float(ratio[i]), k, i))
    candidates.sort(reverse=True)

    best, best_k, best_r = 0.0, 1, float(r[0])
    for value, k, i in candidates:
        if value > best:
            best, best_k, best_r = value, k, float(r[i])
    for value, k, i in candidates[:polish]:
        lo, hi = r[max(i - 1, 0)], r[min(i + 1, r.size - 1)]

        def negative_ratio(x, k=k):
            return -abs(std_laguerre(k, delta, x)) / envelope_T(k, delta, x, gamma_rate, scale)

        found = minimize_scalar(negative_ratio, bounds=(lo, hi), method="bounded",
                                options={"xatol": 1e-10 * hi})
        if -found.fun > best:
            best, best_k, best_r = float(-found.fun), k, float(found.x)

    if "overflow" in flags:
        logger.warning("envelope scan for delta=%g hit overflow", delta)
    logger.info("envelope constant C*=%.6g for delta=%g, k<=%d, %d samples (gamma=%.4g, scale=%s)",
                best, delta, k_max, samples, gamma_rate, scale)
    return EnvelopeCertificate(delta, k_max, samples, gamma_rate, best, best_k, best_r,
                               _regime_of(best_k, delta, best_r, scale), scale, tuple(sorted(flags)))


# --- uniform scans ----------------------------------------------------------------

def _sup_over_k(delta: float, lam, k_max: int, weighted: bool) -> np.ndarray:
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam <= 0):
        raise DomainError("scans need lambda > 0")
    best = np.zeros_like(lam)
    for k, values in iter_psi(k_max, delta, np.sqrt(lam)):
        row = np.abs(values)
        if weighted:
            row = np.sqrt(k * lam) * row
        np.maximum(best, row, out=best)
    return best


def uniform_bound_scan(delta: float, lam, k_max: int):
    """sup_k |psi_k^delta(sqrt(lam))| for k = 0 .. k_max, vectorised over lam"""
    if delta < -1.0 / 3.0:
        raise DomainError(f"uniform scan needs delta >= -1/3, got {delta}")
    best = _sup_over_k(delta, lam, k_max, weighted=False)
    return float(best[0]) if np.ndim(lam) == 0 else best


def weighted_bound_scan(delta: float, lam, k_max: int):
    """sup_k (k lam)^(1/2) |psi_k^delta(sqrt(lam))|, vectorised over lam"""
    if delta < 0.5:
        raise DomainError(f"weighted scan needs delta >= 1/2, got {delta}")
    if np.any(np.asarray(lam) < 1):
        raise DomainError("weighted scan needs lambda >= 1")
    best = _sup_over_k(delta, lam, k_max, weighted=True)
    return float(best[0]) if np.ndim(lam) == 0 else best


def uniform_bound(delta: float, lam):
    """max(1, lam^(-delta-1/3)), the shape of the uniform estimate"""
    lam = np.asarray(lam, dtype=float)
    return np.where(lam <= 1.0, 1.0, lam ** (-delta - 1.0 / 3.0))


def fitted_constant(sups, bound) -> float:
    return float(np.max(np.asarray(sups) / np.asarray(bound)))


def loglog_slope(x, y) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float)), 1)
    return float(slope)


def laguerre_table(deltas, k_max: int, step: int = 1) -> list:
    """Rows (delta, k, psi_k(0)) with the error against the exact value 1"""
    rows = []
    for delta in deltas:
        for k, values in iter_psi(k_max, delta, np.zeros(1)):
            if k % step == 0 or k == k_max:
                value = float(values[0])
                rows.append({"delta": float(delta), "k": k, "psi_at_zero": value,
                             "abs_err": abs(value - 1.0)})
    return rows
