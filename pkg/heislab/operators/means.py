"""
Means
-----
Spherical means A_r f(z, t) = int_{|w|=r} f(z - w, t - 1/2 Im z.conj(w)) d mu_r(w)
by quadrature on the sphere, together with

- sampled fields on cell grids (linear interpolation, zero outside the box),
- right translation and non-isotropic dilation of fields,
- lacunary, local and full (FTC) maximal quantities on discretised radii,
- the cell operator used by the sparse machinery and the localised A_Q,
- empirical continuity and L^p-improving ratios.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import RegularGridInterpolator
from scipy.special import roots_legendre

from heislab.errors import DimensionMismatch, DomainError, UnknownCubeError
from heislab.operators.heis_core import (BoxRegion, CellGrid, HeisPoint, as_arrays, dist_arrays,
                                         koranyi_norm, mul_arrays, twist)

logger = logging.getLogger(__name__)

# evaluation points handled per batch in the quadrature route
CHUNK = 200000


@dataclass(frozen=True)
class SphereRule:
    """Nodes on the unit sphere S^{2n-1} of C^n with positive weights summing to 1"""
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    exactness: int

    @property
    def size(self) -> int:
        return self.weights.size

    def is_antipodal(self) -> bool:
        flipped = {tuple(np.round(-w, 12)) for w in self.nodes}
        return flipped == {tuple(np.round(w, 12)) for w in self.nodes}


def sphere_rule(n: int, nodes: Optional[int] = None, polar_nodes: Optional[int] = None) -> SphereRule:
    """
    n = 1: ``nodes`` equispaced points on the circle.
    n = 2: Hopf coordinates w = (cos(eta) e^{i xi1}, sin(eta) e^{i xi2}); ``nodes`` equispaced
    angles for each xi and Gauss-Legendre in u = sin^2(eta), in which the
    normalised measure is du d xi1 d xi2 / (4 pi^2).
    Defaults: 128 points for n = 1, 16 x 16 x 8 for n = 2.
    """
    nodes = nodes or (128 if n == 1 else 16)
    if nodes < 2 or nodes % 2:
        raise DomainError(f"the circle rule needs an even node count, got {nodes}")
    if n == 1:
        theta = 2.0 * np.pi * np.arange(nodes) / nodes
        pts = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return SphereRule(1, pts, np.full(nodes, 1.0 / nodes), nodes - 1)
    if n == 2:
        polar_nodes = polar_nodes or max(2, nodes // 2)
        x, w = roots_legendre(polar_nodes)
        u = 0.5 * (x + 1.0)
        xi = 2.0 * np.pi * np.arange(nodes) / nodes
        uu, x1, x2 = np.meshgrid(u, xi, xi, indexing="ij")
        ww = np.broadcast_to((0.5 * w)[:, None, None], uu.shape) / nodes ** 2
        c, s = np.sqrt(1.0 - uu), np.sqrt(uu)
        pts = np.stack([c * np.cos(x1), c * np.sin(x1), s * np.cos(x2), s * np.sin(x2)], axis=-1)
        return SphereRule(2, pts.reshape(-1, 4), ww.reshape(-1).copy(),
                          min(nodes - 1, 2 * polar_nodes - 1))
    raise DomainError(f"sphere rules are provided for n in (1, 2), got n={n}")


@dataclass(frozen=True)
class SampledField:
    """Values on the cell centres of a CellGrid with interpolated off-grid evaluation"""
    grid: CellGrid
    values: np.ndarray
    method: str = "linear"

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(self.grid.cells)
        if not np.all(np.isfinite(values)):
            raise DomainError("sampled values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, f: Callable, grid: CellGrid, method: str = "linear") -> "SampledField":
        z, t = grid.centers()
        return cls(grid, np.asarray(f(z, t), dtype=float).reshape(grid.cells), method)

    @property
    def region(self) -> BoxRegion:
        return self.grid.region

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    @cached_property
    def _interpolator(self):
        return RegularGridInterpolator(self.grid.axes, self.values, method=self.method,
                                       bounds_error=False, fill_value=None)

    def __call__(self, z, t):
        z = np.asarray(z, dtype=float)
        t = np.asarray(t, dtype=float)
        if z.shape[-1] != 2 * self.grid.n:
            raise DimensionMismatch(f"field lives on H^{self.grid.n}, got z of width {z.shape[-1]}")
        z, t = np.broadcast_arrays(z, t[..., None])
        t = t[..., 0]
        pts = np.concatenate([z, t[..., None]], axis=-1)
        inside = self.region.contains(z, t)
        values = self._interpolator(pts.reshape(-1, pts.shape[-1])).reshape(t.shape)
        return np.where(inside, values, 0.0)

    def with_values(self, values) -> "SampledField":
        return SampledField(self.grid, values, self.method)

    def norm(self, p: float) -> float:
        return grid_norm(self.flat, self.grid, p)

    def boundary_mass(self) -> float:
        """Share of sum |f| carried by the outermost layer of cells"""
        total = float(np.abs(self.values).sum())
        if total == 0:
            return 0.0
        inner = np.abs(self.values)[tuple(slice(1, -1) for _ in self.grid.cells)]
        return 1.0 - float(inner.sum()) / total


@dataclass(frozen=True)
class MeanResult:
    value: np.ndarray
    flags: tuple = ()

    def scalar(self) -> float:
        return float(np.ravel(self.value)[0])


def grid_norm(values, grid: CellGrid, p: float) -> float:
    """Midpoint-rule L^p norm of cell values"""
    values = np.abs(np.asarray(values, dtype=float))
    if np.isinf(p):
        return float(values.max())
    return float((np.sum(values ** p) * grid.cell_volume) ** (1.0 / p))


def grid_values(f, grid: CellGrid) -> np.ndarray:
    """Flat cell values of a field on ``grid``"""
    if isinstance(f, SampledField) and f.grid == grid:
        return f.flat
    z, t = grid.centers()
    return np.asarray(f(z, t), dtype=float).reshape(-1)


# --- quadrature route ------------------------------------------------------------------------

def spherical_mean(f: Callable, r: float, z, t, rule: SphereRule) -> np.ndarray:
    """A_r f at broadcast points z (..., 2n), t (...), summed node by node"""
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r}")
    z = np.asarray(z, dtype=float)
    t = np.asarray(t, dtype=float)
    if z.shape[-1] != 2 * rule.n:
        raise DimensionMismatch(f"rule lives on S^{2 * rule.n - 1}, points on H^{z.shape[-1] // 2}")
    total = np.zeros(t.shape)
    for w, weight in zip(rule.nodes, rule.weights):
        shift = r * w
        total += weight * f(z - shift, t - 0.5 * twist(z, shift))
    return total


def _exits_region(f, r: float, z, t, rule: SphereRule) -> bool:
    if not isinstance(f, SampledField):
        return False
    for w in rule.nodes:
        shift = r * w
        if not np.all(f.region.contains(z - shift, t - 0.5 * twist(z, shift))):
            return f.boundary_mass() > 1e-8
    return False


def quadrature_spherical_mean(f: Callable, r: float, x, rule: Optional[SphereRule] = None) -> MeanResult:
    z, t = as_arrays(x)
    rule = rule or sphere_rule(z.shape[-1] // 2)
    value = spherical_mean(f, r, z, t, rule)
    flags = ()
    if _exits_region(f, r, z, t, rule):
        flags = ("boundary-mass",)
        logger.warning("sphere of radius %g leaves the sampled region where the field is nonzero", r)
    return MeanResult(value, flags)


def mean_on_grid(f: Callable, r: float, grid: CellGrid, rule: Optional[SphereRule] = None) -> SampledField:
    """A_r f sampled at every cell centre of ``grid``"""
    rule = rule or sphere_rule(grid.n)
    z, t = grid.centers()
    step = max(1, CHUNK // rule.size)
    out = np.empty(grid.size)
    for start in range(0, grid.size, step):
        stop = start + step
        out[start:stop] = spherical_mean(f, r, z[start:stop], t[start:stop], rule)
    return SampledField(grid, out.reshape(grid.cells))


# --- translation and dilation ------------------------------------------------------------------

@dataclass(frozen=True)
class TranslatedField:
    """tau_y f(x) = f(x y^{-1})"""
    f: Callable
    y: HeisPoint

    def __call__(self, z, t):
        zz, tt = mul_arrays(z, t, -self.y.z, -self.y.t)
        return self.f(zz, tt)


@dataclass(frozen=True)
class DilatedField:
    """delta_r f(w, t) = f(r w, r^2 t)"""
    f: Callable
    r: float

    def __call__(self, z, t):
        return self.f(self.r * np.asarray(z, dtype=float), self.r * self.r * np.asarray(t, dtype=float))


def translate(f, y: HeisPoint):
    """Sampled fields are resampled on their own grid; callables are wrapped"""
    if isinstance(f, SampledField):
        if y.n != f.grid.n:
            raise DimensionMismatch(f"field on H^{f.grid.n}, translation in H^{y.n}")
        return SampledField.from_function(TranslatedField(f, y), f.grid, f.method)
    return TranslatedField(f, y)


def dilate_field(f, r: float):
    """
    delta_r f. On a sampled field this is exact: the same values on the
    region rescaled by 1/r in z and 1/r^2 in t.
    """
    if not r > 0:
        raise DomainError(f"dilation factor must be positive, got {r}")
    if isinstance(f, SampledField):
        widths = f.region.half_widths
        region = BoxRegion(tuple(w / r for w in widths[:-1]) + (widths[-1] / (r * r),))
        return SampledField(CellGrid(region, f.grid.cells), f.values, f.method)
    if hasattr(f, "dilated"):
        return f.dilated(r)
    return DilatedField(f, r)


# --- maximal quantities ------------------------------------------------------------------------

def lacunary_max(f: Callable, delta: float, j_range, x, rule: Optional[SphereRule] = None) -> np.ndarray:
    """max over j in the closed range of |A_{delta^j} f(x)|"""
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    z, t = as_arrays(x)
    rule = rule or sphere_rule(z.shape[-1] // 2)
    lo, hi = j_range
    best = np.zeros(t.shape)
    for j in range(lo, hi + 1):
        best = np.maximum(best, np.abs(spherical_mean(f, delta ** j, z, t, rule)))
    return best


def local_radii(delta: float, r_nodes: int) -> np.ndarray:
    """Geometric nodes on [1, 1/delta]; a single node is r = 1"""
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if r_nodes < 1:
        raise DomainError("at least one radius is needed")
    if r_nodes == 1:
        return np.array([1.0])
    return delta ** -(np.arange(r_nodes) / (r_nodes - 1.0))


def local_max(f: Callable, delta: float, r_nodes: int, x, rule: Optional[SphereRule] = None) -> np.ndarray:
    """Discretised sup_{1 <= r <= 1/delta} |A_r f(x)|, a lower bound of the true sup"""
    z, t = as_arrays(x)
    rule = rule or sphere_rule(z.shape[-1] // 2)
    best = np.zeros(t.shape)
    for r in local_radii(delta, r_nodes):
        best = np.maximum(best, np.abs(spherical_mean(f, r, z, t, rule)))
    return best


def derivative_mean_quadrature(f: Callable, r: float, x, rule: Optional[SphereRule] = None,
                               h: float = 1e-3) -> np.ndarray:
    """B_r f = d/dr A_r f by Richardson-extrapolated central differences"""
    if not r > h:
        raise DomainError(f"radius {r} must exceed the step {h}")
    z, t = as_arrays(x)
    rule = rule or sphere_rule(z.shape[-1] // 2)

    def central(step):
        return (spherical_mean(f, r + step, z, t, rule) - spherical_mean(f, r - step, z, t, rule)) / (2.0 * step)

    return (4.0 * central(0.5 * h) - central(h)) / 3.0


@dataclass(frozen=True)
class FtcReport:
    local_max: np.ndarray
    majorant: np.ndarray

    @property
    def holds(self) -> bool:
        return bool(np.all(self.local_max <= self.majorant * (1.0 + 1e-9) + 1e-12))


def ftc_majorant(f: Callable, delta: float, r_nodes: int, x, rule: Optional[SphereRule] = None,
                 fine_nodes: int = 400) -> FtcReport:
    """
    M_delta f(x) against |A_1 f(x)| + int_1^{1/delta} |B_s f(x)| ds, the integral by
    the trapezoid rule on a fine geometric grid.
    """
    z, t = as_arrays(x)
    rule = rule or sphere_rule(z.shape[-1] // 2)
    lhs = local_max(f, delta, r_nodes, (z, t), rule)
    s = local_radii(delta, fine_nodes)
    h = 0.25 * float(np.min(np.diff(s))) if fine_nodes > 1 else 1e-3
    slopes = np.stack([np.abs(derivative_mean_quadrature(f, si, (z, t), rule, min(h, 1e-3)))
                       for si in s], axis=0)
    integral = trapezoid(slopes, s, axis=0) if fine_nodes > 1 else 0.0
    base = np.abs(spherical_mean(f, 1.0, z, t, rule))
    return FtcReport(lhs, base + integral)


# --- continuity ------------------------------------------------------------------------------

def continuity_ratio(f: Callable, y: HeisPoint, p: float, q: float, r: float, grid: CellGrid,
                     rule: Optional[SphereRule] = None) -> float:
    """||A_r f - A_r tau_y f||_q / ||f||_p with grid norms"""
    if koranyi_norm(y) > 1.0:
        raise DomainError(f"translations need |y| <= 1, got {koranyi_norm(y):.6g}")
    rule = rule or sphere_rule(grid.n)
    base = mean_on_grid(f, r, grid, rule).flat
    moved = mean_on_grid(TranslatedField(f, y), r, grid, rule).flat
    denominator = grid_norm(grid_values(f, grid), grid, p)
    if denominator == 0:
        return 0.0
    return grid_norm(base - moved, grid, q) / denominator


def lp_improving_ratio(f: Callable, p: float, q: float, grid: CellGrid, rule: Optional[SphereRule] = None,
                       r: float = 1.0) -> float:
    """||A_r f||_q / ||f||_p with grid norms"""
    rule = rule or sphere_rule(grid.n)
    denominator = grid_norm(grid_values(f, grid), grid, p)
    if denominator == 0:
        return 0.0
    return grid_norm(mean_on_grid(f, r, grid, rule).flat, grid, q) / denominator


# --- cell operator ---------------------------------------------------------------------------

@dataclass
class CellSphereAverager:
    """
    A_r acting on cell values: the mean at cell x reads the cell containing
    x (-r w_j, 0) for every rule node, cells outside the region read 0.
    Target tables are cached per radius.
    """
    grid: CellGrid
    rule: SphereRule
    _targets: dict = field(default_factory=dict, repr=False)
    _margins: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.rule.n != self.grid.n:
            raise DimensionMismatch(f"rule on H^{self.rule.n}, grid on H^{self.grid.n}")

    def targets(self, r: float) -> np.ndarray:
        key = float(r)
        if key not in self._targets:
            if not key > 0:
                raise DomainError(f"radius must be positive, got {r}")
            z, t = self.grid.centers()
            table = np.empty((self.grid.size, self.rule.size), dtype=np.int32)
            for j, w in enumerate(self.rule.nodes):
                shift = key * w
                table[:, j] = self.grid.locate(z - shift, t - 0.5 * twist(z, shift))
            self._targets[key] = table
            logger.debug("built cell targets for r=%g (%d cells x %d nodes)", key, *table.shape)
        return self._targets[key]

    def apply(self, values, r: float) -> np.ndarray:
        padded = np.append(np.asarray(values, dtype=float).reshape(-1), 0.0)
        return padded[self.targets(r)] @ self.rule.weights

    def max_over(self, values, radii) -> np.ndarray:
        return np.max([np.abs(self.apply(values, r)) for r in radii], axis=0)


def ball_cells(grid: CellGrid, center: HeisPoint, radius: float) -> np.ndarray:
    """Flat indices of the cells whose centre lies in the open ball B(center, radius)"""
    z0 = np.asarray(center.z, dtype=float)
    # |dz| < radius on every z axis, |dt| < radius^2 + |z0| radius / 2
    halves = np.array([radius] * z0.size + [radius * radius + 0.5 * float(np.linalg.norm(z0)) * radius])
    halves *= 1.0 + 1e-9
    ranges = [np.flatnonzero(np.abs(axis - c) < h)
              for axis, c, h in zip(grid.axes, np.append(z0, center.t), halves)]
    if any(r.size == 0 for r in ranges):
        return np.empty(0, dtype=np.int64)
    mesh = np.meshgrid(*ranges, indexing="ij")
    flat = np.ravel_multi_index(tuple(m.reshape(-1) for m in mesh), grid.cells)
    z, t = grid.centers()
    return flat[dist_arrays(z0, center.t, z[flat], t[flat]) < radius]


def vq_labels(system, level: int, averager: CellSphereAverager, atoms=None) -> np.ndarray:
    """
    Per cell, the index of the level cube Q of ``system`` whose V_Q holds it,
    -1 for none. V_Q is the union of the atoms P with B(z_P, delta^{level+1})
    inside Q, balls taken within the region. The atoms are the level + 3 cubes
    of ``atoms`` (default ``system``) when built, single cells otherwise.
    """
    atoms = atoms or system
    key = (id(system), level, id(atoms))
    if key not in averager._margins:
        grid = averager.grid
        labels = system.labels(level)
        radius = system.delta ** (level + 1)
        if level + 3 <= atoms.k_max:
            pieces = [(cube.center, cube.cells) for cube in atoms.levels[level + 3]]
        else:
            pieces = ((grid.center(cell), cell) for cell in range(grid.size))
        owner = np.full(grid.size, -1, dtype=np.int64)
        for center, cells in pieces:
            found = labels[ball_cells(grid, center, radius)]
            if found.size and np.all(found == found[0]):
                owner[cells] = found[0]
        averager._margins[key] = owner
        logger.debug("V_Q at level %d of system %d covers %d of %d cells",
                     level, system.alpha, int(np.count_nonzero(owner >= 0)), grid.size)
    return averager._margins[key]


def margin_mask(system, level: int, averager: CellSphereAverager, atoms=None) -> np.ndarray:
    """Cells lying in V_Q for some level cube Q of ``system``"""
    return vq_labels(system, level, averager, atoms) >= 0


def localized_AQ(f, cube, system, averager: CellSphereAverager, radii=None, atoms=None) -> np.ndarray:
    """
    A_Q f = A_{delta^{k+2}} (f 1_{V_Q}) as cell values on the whole grid; with
    several ``radii`` the maximum over them (the local full variant).
    """
    if cube.system != system.alpha or cube.key not in system.index:
        raise UnknownCubeError(f"cube {cube.key} does not belong to system {system.alpha}")
    radii = [system.delta ** (cube.level + 2)] if radii is None else list(radii)
    values = grid_values(f, averager.grid) if callable(f) else np.asarray(f, dtype=float).reshape(-1)
    inside = vq_labels(system, cube.level, averager, atoms) == cube.index
    return averager.max_over(values * inside, radii)


def support_outside(values, cube) -> np.ndarray:
    """Cells outside ``cube`` where the cell values do not vanish"""
    values = np.asarray(values, dtype=float).reshape(-1)
    outside = np.ones(values.size, dtype=bool)
    outside[cube.cells] = False
    return np.flatnonzero(outside & (values != 0.0))
