"""
Weights
-------
A_p and reverse Hoelder characteristics over dyadic cube collections, and
the weighted sparse-form certificate with the max-type exponent alpha.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from heislab.errors import DomainError
from heislab.operators.dyadic import cube_average
from heislab.operators.heis_core import CellGrid, norm_arrays
from heislab.operators.sparse import SparseFamily, overlap_depth, sparse_form

logger = logging.getLogger(__name__)


def _dual(p: float) -> float:
    return np.inf if p == 1 else p / (p - 1.0)


def _check_positive(w):
    w = np.asarray(w, dtype=float).reshape(-1)
    if not np.all(w > 0):
        raise DomainError("weights must be strictly positive on every cell")
    return w


def ap_char(w, p: float, cubes) -> float:
    """sup_Q <w>_Q <sigma>_Q^(p-1), sigma = w^(1-p')"""
    if not p > 1:
        raise DomainError(f"A_p needs p > 1, got {p}")
    w = _check_positive(w)
    sigma = w ** (1.0 - _dual(p))
    return float(max(cube_average(w, c) * cube_average(sigma, c) ** (p - 1.0) for c in cubes))


def rh_char(w, p: float, cubes) -> float:
    """sup_Q <w>_{Q,p} / <w>_Q"""
    if p < 1:
        raise DomainError(f"RH_p needs p >= 1, got {p}")
    w = _check_positive(w)
    if p == 1:
        return 1.0
    return float(max(cube_average(w, c, p) / cube_average(w, c) for c in cubes))


@dataclass
class WeightField:
    """Positive cell values with cached characteristics keyed by (kind, p, collection)"""
    name: str
    values: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.values = _check_positive(self.values)

    def ap(self, p: float, cubes, collection: str = "all") -> float:
        key = ("A", float(p), collection)
        if key not in self._cache:
            self._cache[key] = ap_char(self.values, p, cubes)
        return self._cache[key]

    def rh(self, p: float, cubes, collection: str = "all") -> float:
        key = ("RH", float(p), collection)
        if key not in self._cache:
            self._cache[key] = rh_char(self.values, p, cubes)
        return self._cache[key]

    def sigma(self, p: float) -> np.ndarray:
        return self.values ** (1.0 - _dual(p))


def bfp_alpha(p: float, q0: float) -> float:
    """max{1/(p-1), (q0'-1)/(q0'-p)}; q0 = 1 means q0' = inf and the second term is 1"""
    q0_dual = _dual(q0)
    second = 1.0 if np.isinf(q0_dual) else (q0_dual - 1.0) / (q0_dual - p)
    return max(1.0 / (p - 1.0), second)


def reverse_exponent(p: float, q0: float) -> float:
    """(q0'/p)' = q0 / (q0 + p - p q0)"""
    return q0 / (q0 + p - p * q0)


def _check_bfp_exponents(p: float, p0: float, q0: float):
    q0_dual = _dual(q0)
    if not p0 >= 1:
        raise DomainError(f"need p0 >= 1, got {p0}")
    if not (p0 < p < q0_dual):
        raise DomainError(f"need p0 < p < q0' , got p0={p0}, p={p}, q0'={q0_dual}")


@dataclass(frozen=True)
class BfpReport:
    weight: str
    p: float
    p0: float
    q0: float
    ap_char: float
    rh_char: float
    alpha: float
    depth: int
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs / self.lhs if self.lhs > 0 else np.inf

    def as_row(self) -> dict:
        return {"weight_id": self.weight, "p": self.p, "p0": self.p0, "q0": self.q0,
                "ap_char": self.ap_char, "rh_char": self.rh_char, "alpha": self.alpha,
                "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack}


def bfp_check(family: SparseFamily, f, g, w: WeightField, p: float, p0: float, q0: float,
              cubes, grid: CellGrid) -> BfpReport:
    """
    Lambda_{p0,q0}(f, g) against
    D ([w]_{A_{p/p0}} [w]_{RH_{(q0'/p)'}})^alpha ||f||_{L^p(w)} ||g||_{L^{p'}(sigma)}
    with D the overlap depth of the family and the characteristics taken over ``cubes``.
    """
    _check_bfp_exponents(p, p0, q0)
    f = np.asarray(f, dtype=float).reshape(-1)
    g = np.asarray(g, dtype=float).reshape(-1)
    volume = grid.cell_volume
    lhs = sparse_form(family, f, g, p0, q0, volume)
    a = w.ap(p / p0, cubes)
    rh = w.rh(reverse_exponent(p, q0), cubes)
    alpha = bfp_alpha(p, q0)
    depth = overlap_depth(family.cubes, grid.size)
    p_dual = _dual(p)
    f_norm = float(np.sum(np.abs(f) ** p * w.values) * volume) ** (1.0 / p)
    g_norm = float(np.sum(np.abs(g) ** p_dual * w.sigma(p)) * volume) ** (1.0 / p_dual)
    rhs = depth * (a * rh) ** alpha * f_norm * g_norm
    report = BfpReport(w.name, p, p0, q0, a, rh, alpha, depth, lhs, rhs)
    logger.debug("weighted form %s p=%g p0=%g q0=%g: slack %.4g", w.name, p, p0, q0, report.slack)
    return report


def phi_exponent(p0_inv: float, n: int) -> float:
    """1/phi(1/p0): 1 - 1/(n p0) up to 1/p0 = n/(n+1), n (1 - 1/p0) beyond"""
    if not 0 < p0_inv < 1:
        raise DomainError(f"1/p0 must lie in (0, 1), got {p0_inv}")
    if p0_inv <= n / (n + 1.0):
        return 1.0 - p0_inv / n
    return n * (1.0 - p0_inv)


def weight_corpus(grid: CellGrid, power: float = -0.5, cap: float = 50.0) -> list:
    """Constants, two checkerboards, a truncated Koranyi power weight and an indicator with a floor"""
    z, t = grid.centers()
    index = np.indices(grid.cells).reshape(len(grid.cells), -1)
    fine = np.where(index.sum(axis=0) % 2 == 0, 1.0, 4.0)
    coarse = np.where((index // 2).sum(axis=0) % 2 == 0, 1.0, 9.0)
    size = norm_arrays(z, t)
    powered = np.minimum(np.maximum(size, 1e-300) ** power, cap) if power < 0 else 1.0 + size ** power
    box = np.all(np.abs(z) < 0.5 * np.asarray(grid.region.half_widths[:-1]), axis=-1)
    box &= np.abs(t) < 0.5 * grid.region.half_widths[-1]
    return [
        WeightField("constant-1", np.ones(grid.size)),
        WeightField("constant-7", np.full(grid.size, 7.0)),
        WeightField("checkerboard-fine", fine),
        WeightField("checkerboard-coarse", coarse),
        WeightField(f"power-{power:g}", powered),
        WeightField("indicator-floor", np.where(box, 10.0, 1.0)),
    ]
