"""
Sparse
------
Linearisation of the localised maximal operators, Calderon-Zygmund stopping
cubes, the recursive sparse-family builder, sparse forms, Lorentz norms and
the Carleson embedding check. All quantities are grid-cell sums, so the set
identities are exact.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import integrate

from heislab.errors import DomainError
from heislab.operators.dyadic import DyadicCube, DyadicSystem, cube_average
from heislab.operators.means import CellSphereAverager, localized_AQ, margin_mask
from heislab.operators import regions

logger = logging.getLogger(__name__)

SPARSITY = 0.5


@dataclass
class LinearizationSets:
    """Per-cube E_Q and B_Q as boolean cell masks, plus the A_Q f values"""
    cubes: list
    E: dict
    B: dict
    values: dict
    sup: np.ndarray

    def b_disjoint(self) -> bool:
        counts = sum(mask.astype(np.int64) for mask in self.B.values())
        return bool(np.all(counts <= 1))

    def union_matches(self) -> bool:
        union_b = np.any(np.stack(list(self.B.values())), axis=0)
        union_e = np.any(np.stack(list(self.E.values())), axis=0)
        return bool(np.array_equal(union_b, union_e))

    def pairing(self, g, cell_volume: float) -> float:
        """sum_Q <A_Q f, g 1_{B_Q}>"""
        g = np.asarray(g, dtype=float).reshape(-1)
        return float(sum(np.sum(self.values[key] * g * self.B[key]) for key in self.B) * cell_volume)


def _linearize(values: dict, cubes: list, system: DyadicSystem) -> LinearizationSets:
    sup = np.max(np.stack([values[c.key] for c in cubes]), axis=0)
    positive = sup > 0
    E = {}
    for cube in cubes:
        inside = np.zeros(sup.size, dtype=bool)
        inside[cube.cells] = True
        E[cube.key] = inside & positive & (values[cube.key] >= 0.5 * sup)
    B = {}
    for cube in cubes:
        mask = E[cube.key].copy()
        for ancestor in system.ancestors(cube):
            if ancestor.key in E:
                mask &= ~E[ancestor.key]
        B[cube.key] = mask
    return LinearizationSets(cubes, E, B, values, sup)


def linearize(f, cubes: list, system: DyadicSystem, averager: CellSphereAverager,
              atoms: Optional[DyadicSystem] = None) -> LinearizationSets:
    """
    E_Q = {x in Q : A_Q f(x) >= 1/2 sup_P A_P f(x)} and
    B_Q = E_Q minus the E sets of the strict ancestors of Q, for cubes of one system.
    """
    values = {cube.key: localized_AQ(f, cube, system, averager, atoms=atoms) for cube in cubes}
    return _linearize(values, cubes, system)


def full_radii(delta: float, level: int, r_nodes: int) -> list:
    """Geometric radii delta^{k+2+i/r_nodes}, i = 0 .. r_nodes-1, inside [delta^{k+3}, delta^{k+2}]"""
    if r_nodes < 1:
        raise DomainError("at least one radius is needed")
    return [delta ** (level + 2 + i / r_nodes) for i in range(r_nodes)]


def linearize_full(f, cubes: list, system: DyadicSystem, averager: CellSphereAverager,
                   r_nodes: int = 4, atoms: Optional[DyadicSystem] = None) -> LinearizationSets:
    """As linearize with A_Q replaced by the local full operator over the radii grid"""
    values = {cube.key: localized_AQ(f, cube, system, averager,
                                     full_radii(system.delta, cube.level, r_nodes), atoms)
              for cube in cubes}
    return _linearize(values, cubes, system)


@dataclass(frozen=True)
class CoveringReport:
    checked: int
    violations: int
    uncovered: int

    @property
    def holds(self) -> bool:
        return self.violations == 0


def check_covering(f, level: int, systems: list, averager: CellSphereAverager,
                   radii: Optional[list] = None) -> CoveringReport:
    """
    sum over systems and level cubes of A_Q f >= A_r f at every cell whose
    sphere samples all land in some V_Q. Other cells are counted as uncovered.
    """
    delta = systems[0].delta
    radii = [delta ** (level + 2)] if radii is None else radii
    f = np.asarray(f, dtype=float).reshape(-1)
    grid = averager.grid
    covered = np.zeros(grid.size, dtype=bool)
    total = np.zeros(grid.size)
    for system in systems:
        margin = margin_mask(system, level, averager, systems[0])
        covered |= margin
        total += averager.max_over(f * margin, radii)
    direct = averager.max_over(f, radii)
    resolved = np.ones(grid.size, dtype=bool)
    for r in radii:
        table = averager.targets(r)
        resolved &= np.all((table < 0) | covered[np.where(table >= 0, table, 0)], axis=1)
    violations = int(np.count_nonzero(resolved & (total < direct - 1e-12)))
    return CoveringReport(int(resolved.sum()), violations, int((~resolved).sum()))


# --- stopping cubes --------------------------------------------------------------------------

def cz_stopping(f, q0: DyadicCube, p: float, threshold_mult: float, system: DyadicSystem) -> list:
    """Maximal strict dyadic subcubes P of q0 with <f>_{P,p} > threshold_mult <f>_{q0,p}"""
    if not threshold_mult > 1:
        raise DomainError(f"threshold multiplier must exceed 1, got {threshold_mult}")
    level = threshold_mult * cube_average(f, q0, p)
    found = []
    stack = list(reversed(system.children(q0)))
    while stack:
        cube = stack.pop()
        if cube_average(f, cube, p) > level:
            found.append(cube)
        else:
            stack.extend(reversed(system.children(cube)))
    return sorted(found, key=lambda c: (c.level, c.index))


def cz_stopping_brute(f, q0: DyadicCube, p: float, threshold_mult: float, system: DyadicSystem) -> list:
    """Same selection by enumerating every descendant and keeping the maximal ones"""
    level = threshold_mult * cube_average(f, q0, p)
    heavy = {c.key: c for c in system.descendants(q0) if cube_average(f, c, p) > level}
    maximal = []
    for cube in heavy.values():
        above = [a for a in system.ancestors(cube) if a.level > q0.level]
        if not any(a.key in heavy for a in above):
            maximal.append(cube)
    return sorted(maximal, key=lambda c: (c.level, c.index))


@dataclass(frozen=True)
class StoppingResult:
    cubes: list
    multiplier: float
    covered_fraction: float


def stopping_children(q0: DyadicCube, f, g, p: float, q: float, system: DyadicSystem,
                      threshold_mult: float = 2.0, max_raises: int = 40) -> StoppingResult:
    """
    Maximal P in q0 with <f>_{P,p} > m <f>_{q0,p} or <g>_{P,q} > m <g>_{q0,q}.
    m starts at ``threshold_mult`` and doubles until the union covers less
    than half of q0.
    """
    mult = threshold_mult
    f_level = cube_average(f, q0, p)
    g_level = cube_average(g, q0, q)
    for _ in range(max_raises):
        found = []
        stack = list(reversed(system.children(q0)))
        while stack:
            cube = stack.pop()
            if cube_average(f, cube, p) > mult * f_level or cube_average(g, cube, q) > mult * g_level:
                found.append(cube)
            else:
                stack.extend(reversed(system.children(cube)))
        fraction = sum(c.cell_count for c in found) / q0.cell_count
        if fraction < SPARSITY:
            if mult != threshold_mult:
                logger.info("stopping threshold for cube %s raised to %g", q0.key, mult)
            return StoppingResult(sorted(found, key=lambda c: (c.level, c.index)), mult, fraction)
        mult *= 2.0
    raise DomainError(f"no stopping threshold below {mult:g} leaves half of cube {q0.key}")


@dataclass(frozen=True)
class KeyBound:
    """
    Restricted linearised sum over the subcubes of a top cube that miss the
    stopping cubes of f, against |Q0| <f>_{Q0,p} <g>_{Q0,q}.
    ``condition`` is the largest <f>_{Q,p} / <f>_{Q0,p} over the kept cubes and their ancestors in Q0.
    """
    lhs: float
    rhs: float
    kept: int
    condition: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else (0.0 if self.lhs == 0 else np.inf)


def key_bound(f, g, q0: DyadicCube, p: float, q: float, system: DyadicSystem, averager: CellSphereAverager,
              threshold_mult: float = 2.0, atoms: Optional[DyadicSystem] = None) -> KeyBound:
    """
    sum_{Q in Q_0} <A_Q f, g 1_{B_Q}> where Q_0 holds the subcubes of q0 meeting
    no stopping cube of f at threshold_mult <f>_{q0,p}, and B_Q comes from
    linearising over every subcube of q0.
    """
    f = np.asarray(f, dtype=float).reshape(-1)
    g = np.asarray(g, dtype=float).reshape(-1)
    heavy = np.zeros(f.size, dtype=bool)
    for cube in cz_stopping(f, q0, p, threshold_mult, system):
        heavy[cube.cells] = True
    cubes = [q0] + system.descendants(q0)
    sets = linearize(f, cubes, system, averager, atoms)
    kept = [c for c in cubes if not heavy[c.cells].any()]
    cell_volume = averager.grid.cell_volume
    lhs = float(sum(np.sum(sets.values[c.key] * g * sets.B[c.key]) for c in kept) * cell_volume)
    top = cube_average(f, q0, p)
    condition = 0.0
    if top > 0:
        for cube in kept:
            chain = [cube] + [a for a in system.ancestors(cube) if a.level >= q0.level]
            condition = max(condition, max(cube_average(f, a, p) for a in chain) / top)
    rhs = q0.cell_count * cell_volume * top * cube_average(g, q0, q)
    return KeyBound(lhs, rhs, len(kept), condition)


@dataclass
class SparseFamily:
    """Stopping cubes with their disjoint major subsets F_S (cell masks)"""
    cubes: list
    major: dict
    eta: float = SPARSITY
    multipliers: dict = field(default_factory=dict)
    depth: int = 0
    flags: tuple = ()

    @property
    def top(self) -> DyadicCube:
        return self.cubes[0]

    def is_sparse(self) -> bool:
        counts = sum(mask.astype(np.int64) for mask in self.major.values())
        disjoint = bool(np.all(counts <= 1))
        large = all(self.major[c.key].sum() > self.eta * c.cell_count for c in self.cubes)
        return disjoint and large


def build_sparse_family(f, g, q0: DyadicCube, p: float, q: float, system: DyadicSystem,
                        max_depth: int = 32) -> SparseFamily:
    """Recursive stopping construction from q0; F_S = S minus its stopping children"""
    size = system.grid.size
    cubes, major, multipliers = [], {}, {}
    flags = set()
    frontier = [(q0, 0)]
    deepest = 0
    while frontier:
        cube, depth = frontier.pop(0)
        deepest = max(deepest, depth)
        cubes.append(cube)
        result = stopping_children(cube, f, g, p, q, system)
        multipliers[cube.key] = result.multiplier
        mask = np.zeros(size, dtype=bool)
        mask[cube.cells] = True
        for child in result.cubes:
            mask[child.cells] = False
        major[cube.key] = mask
        if depth >= max_depth:
            if result.cubes:
                flags.add("max-depth")
            continue
        frontier.extend((child, depth + 1) for child in result.cubes)
    if flags:
        logger.warning("sparse family from %s stopped at depth %d", q0.key, max_depth)
    return SparseFamily(cubes, major, SPARSITY, multipliers, deepest, tuple(sorted(flags)))


def sparse_form(family: SparseFamily, f, g, p: float, q: float, cell_volume: float) -> float:
    """sum_S |S| <f>_{S,p} <g>_{S,q}"""
    return float(sum(c.cell_count * cell_volume * cube_average(f, c, p) * cube_average(g, c, q)
                     for c in family.cubes))


@dataclass(frozen=True)
class DominationReport:
    p: float
    q: float
    lhs: float
    rhs: float
    family_size: int
    max_depth: int
    flags: tuple = ()

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else (0.0 if self.lhs == 0 else np.inf)


def verify_domination(f, g, p: float, q: float, systems: list, averager: CellSphereAverager,
                      full: bool = False, r_nodes: int = 4, max_depth: int = 32,
                      rho: Optional[float] = None) -> DominationReport:
    """
    <M f, g> against the sum over systems of the sparse forms built from the
    coarsest cubes. M is the discretised lacunary maximal function over the
    radii delta^{k+2} of the built levels, or with ``full`` the maximum over
    the radii grids of the local full operator.

    With ``rho`` (> p) the f averages of the form are rho-averages, which is the
    form the level-set argument for bounded f produces.
    """
    n = averager.grid.n
    triangle = regions.full_sparse(n) if full else regions.lacunary_sparse(n)
    point = (Fraction(1.0 / p).limit_denominator(10 ** 6), Fraction(1.0 / q).limit_denominator(10 ** 6))
    if not regions.contains(triangle, point, strict=True):
        raise DomainError(f"(1/p, 1/q) = ({1 / p:.4g}, {1 / q:.4g}) is not inside the {triangle.name} triangle")
    if rho is not None and not rho > p:
        raise DomainError(f"rho = {rho} must exceed p = {p}")
    f_exponent = p if rho is None else rho
    f = np.asarray(f, dtype=float).reshape(-1)
    g = np.asarray(g, dtype=float).reshape(-1)
    first = systems[0]
    radii = []
    for level in range(first.k_min, first.k_max + 1):
        radii.extend(full_radii(first.delta, level, r_nodes) if full else [first.delta ** (level + 2)])
    maximal = averager.max_over(f, radii)
    lhs = float(np.sum(maximal * g) * averager.grid.cell_volume)

    rhs, size, depth, flags = 0.0, 0, 0, set()
    for system in systems:
        for top in system.levels[system.k_min]:
            family = build_sparse_family(f, g, top, p, q, system, max_depth)
            rhs += sparse_form(family, f, g, f_exponent, q, averager.grid.cell_volume)
            size += len(family.cubes)
            depth = max(depth, family.depth)
            flags.update(family.flags)
    report = DominationReport(p, q, lhs, rhs, size, depth, tuple(sorted(flags)))
    logger.info("domination p=%g q=%g: lhs %.6g rhs %.6g ratio %.4g (%d cubes)",
                p, q, lhs, rhs, report.ratio, size)
    return report


# --- Lorentz norms ------------------------------------------------------------------------

def _decreasing(values, measure):
    values = np.abs(np.asarray(values, dtype=float).reshape(-1))
    measure = np.asarray(measure, dtype=float).reshape(-1)
    if measure.size == 1:
        measure = np.full(values.size, float(measure[0]))
    order = np.argsort(-values, kind="stable")
    return values[order], np.cumsum(measure[order])


def lorentz_norm(values, r: float, measure) -> float:
    """int_0^inf mu{|f| > s}^(1/r) ds as sum_i (v_i - v_{i+1}) T_i^(1/r)"""
    if not r > 1:
        raise DomainError(f"Lorentz exponent must exceed 1, got {r}")
    v, cumulative = _decreasing(values, measure)
    steps = v - np.append(v[1:], 0.0)
    return float(np.sum(steps * cumulative ** (1.0 / r)))


def lorentz_norm_rearrangement(values, r: float, measure) -> float:
    """int_0^inf t^(1/r - 1) f*(t) dt; equals r times the distribution form"""
    if not r > 1:
        raise DomainError(f"Lorentz exponent must exceed 1, got {r}")
    v, cumulative = _decreasing(values, measure)
    previous = np.append(0.0, cumulative[:-1])
    return float(np.sum(v * r * (cumulative ** (1.0 / r) - previous ** (1.0 / r))))


def check_level_set_lemma(values, r: float, measure) -> tuple:
    """
    (sum_m 2^m mu(E_m)^(1/r), 2 ||f||) with E_m = {2^m <= f < 2^(m+1)}
    and the distribution-form norm.
    """
    v = np.abs(np.asarray(values, dtype=float).reshape(-1))
    measure = np.broadcast_to(np.asarray(measure, dtype=float).reshape(-1), v.shape)
    positive = v > 0
    exponents = np.floor(np.log2(v[positive])).astype(np.int64)
    lhs = 0.0
    for m in np.unique(exponents):
        lhs += 2.0 ** m * float(measure[positive][exponents == m].sum()) ** (1.0 / r)
    return lhs, 2.0 * lorentz_norm(v, r, measure)


def proba_constant(r: float, p: float) -> float:
    """(int_0^1 t^(-p'/r') dt)^(1/p') = (1 - p'/r')^(-1/p') for p > r"""
    if not (r > 1 and p > r):
        raise DomainError(f"need 1 < r < p, got r={r}, p={p}")
    p_dual = p / (p - 1.0)
    r_dual = r / (r - 1.0)
    return float((1.0 / (1.0 - p_dual / r_dual)) ** (1.0 / p_dual))


def proba_constant_quadrature(r: float, p: float) -> float:
    proba_constant(r, p)
    p_dual = p / (p - 1.0)
    r_dual = r / (r - 1.0)
    value, _ = integrate.quad(lambda t: t ** (-p_dual / r_dual), 0.0, 1.0, limit=200)
    return float(value ** (1.0 / p_dual))


def check_proba_lemma(values, r: float, p: float, measure) -> tuple:
    """(||f||_{L^{r,1}} in rearrangement form, C_{r,p} ||f||_p) on a probability space"""
    v = np.abs(np.asarray(values, dtype=float).reshape(-1))
    measure = np.broadcast_to(np.asarray(measure, dtype=float).reshape(-1), v.shape)
    lp = float(np.sum(measure * v ** p) ** (1.0 / p))
    return lorentz_norm_rearrangement(v, r, measure), proba_constant(r, p) * lp


# --- counting --------------------------------------------------------------------------------

def overlap_depth(cubes: list, size: int) -> int:
    """Largest number of cubes sharing one cell"""
    counts = np.zeros(size, dtype=np.int64)
    for cube in cubes:
        counts[cube.cells] += 1
    return int(counts.max()) if cubes else 0


def carleson_check(family: SparseFamily, phi, s: float, t: float, cell_volume: float) -> tuple:
    """(sum_Q <phi>_{Q,s} |Q|, <phi>_{Q0,t} |Q0|) with Q0 the top of the family"""
    if not 1 <= s < t:
        raise DomainError(f"need 1 <= s < t, got s={s}, t={t}")
    lhs = sum(cube_average(phi, c, s) * c.cell_count * cell_volume for c in family.cubes)
    top = family.top
    return float(lhs), float(cube_average(phi, top, t) * top.cell_count * cell_volume)
