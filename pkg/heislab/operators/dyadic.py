"""
Dyadic
------
Adjacent dyadic systems on (H^n, d_L) restricted to a box region. Cubes
are explicit sets of grid cells, so every structural property is checked
by enumeration.

Construction per system:
    1. nested nets: level k keeps the level k-1 net and adds cells in a
       seeded random order while they stay delta^k away from the net;
    2. every cell joins its nearest finest-level net point;
    3. each net point at level k+1 hangs under its nearest level-k point.
The cube tree then partitions every level and is nested by construction.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from heislab.errors import DomainError, GridResolutionError, UnknownCubeError
from heislab.operators.heis_core import BoxRegion, CellGrid, HeisPoint, dist_arrays, norm_arrays

logger = logging.getLogger(__name__)

STRICT_DELTA = 1.0 / 96.0
INNER_FACTOR = 1.0 / 12.0
OUTER_FACTOR = 4.0


@dataclass
class DyadicCube:
    system: int
    level: int
    index: int
    center: HeisPoint
    center_cell: int
    cells: np.ndarray
    parent: Optional[int] = None
    children: list = field(default_factory=list)
    clipped: bool = False

    @property
    def key(self) -> tuple:
        return self.system, self.level, self.index

    @property
    def cell_count(self) -> int:
        return int(self.cells.size)

    def measure(self, grid: CellGrid) -> float:
        return self.cell_count * grid.cell_volume


class DyadicSystem:
    """One dyadic system: cubes per level plus a cell -> cube label array per level"""

    def __init__(self, alpha: int, grid: CellGrid, delta: float, k_min: int, k_max: int):
        self.alpha = alpha
        self.grid = grid
        self.delta = delta
        self.k_min = k_min
        self.k_max = k_max
        self.levels = {}
        self._labels = {}

    @property
    def index(self) -> set:
        return {cube.key for cubes in self.levels.values() for cube in cubes}

    def labels(self, level: int) -> np.ndarray:
        if level not in self._labels:
            raise UnknownCubeError(f"system {self.alpha} has no level {level}")
        return self._labels[level]

    def cube(self, level: int, index: int) -> DyadicCube:
        try:
            return self.levels[level][index]
        except (KeyError, IndexError):
            raise UnknownCubeError(f"no cube {index} at level {level} in system {self.alpha}") from None

    def cubes(self, levels=None):
        for level in sorted(self.levels if levels is None else levels):
            yield from self.levels[level]

    def children(self, cube: DyadicCube) -> list:
        return [self.cube(cube.level + 1, i) for i in cube.children]

    def parent(self, cube: DyadicCube) -> Optional[DyadicCube]:
        return None if cube.parent is None else self.cube(cube.level - 1, cube.parent)

    def ancestors(self, cube: DyadicCube) -> list:
        found = []
        current = self.parent(cube)
        while current is not None:
            found.append(current)
            current = self.parent(current)
        return found

    def descendants(self, cube: DyadicCube) -> list:
        found, stack = [], list(self.children(cube))
        while stack:
            current = stack.pop()
            found.append(current)
            stack.extend(self.children(current))
        return sorted(found, key=lambda c: (c.level, c.index))

    def locate(self, z, t, level: int) -> Optional[DyadicCube]:
        """The level cube containing (z, t), None outside the region"""
        cell = int(self.grid.locate(np.asarray(z, dtype=float), float(t)))
        if cell < 0:
            return None
        return self.cube(level, int(self.labels(level)[cell]))

    def locate_point(self, x: HeisPoint, level: int) -> Optional[DyadicCube]:
        return self.locate(x.z, x.t, level)


# --- construction ------------------------------------------------------------------------

def _distances_to(grid: CellGrid, cell: int) -> np.ndarray:
    z, t = grid.centers()
    return dist_arrays(z[cell], t[cell], z, t)


def _nested_nets(grid: CellGrid, delta: float, k_min: int, k_max: int, rng: np.random.Generator) -> dict:
    nets = {}
    net = []
    nearest = np.full(grid.size, np.inf)
    for level in range(k_min, k_max + 1):
        separation = delta ** level
        for cell in rng.permutation(grid.size):
            if nearest[cell] >= separation:
                net.append(int(cell))
                nearest = np.minimum(nearest, _distances_to(grid, cell))
        nets[level] = list(net)
        logger.debug("level %d net: %d points at separation %.3g", level, len(net), separation)
    return nets


def _nearest_of(grid: CellGrid, points: list, cells) -> np.ndarray:
    """Position in ``points`` of the nearest point for every cell in ``cells``"""
    best = np.full(len(cells), np.inf)
    owner = np.zeros(len(cells), dtype=np.int64)
    z, t = grid.centers()
    for position, point in enumerate(points):
        d = dist_arrays(z[point], t[point], z[cells], t[cells])
        closer = d < best
        best[closer] = d[closer]
        owner[closer] = position
    return owner


def _is_clipped(grid: CellGrid, center: HeisPoint, radius: float) -> bool:
    """Whether B(center, radius) may leave the region"""
    widths = np.asarray(grid.region.half_widths)
    if np.any(np.abs(center.z) + radius > widths[:-1]):
        return True
    reach = radius * radius + 0.5 * float(np.linalg.norm(center.z)) * radius
    return abs(center.t) + reach > widths[-1]


def _build_system(alpha: int, grid: CellGrid, delta: float, k_min: int, k_max: int, seed: int) -> DyadicSystem:
    rng = np.random.default_rng([seed, alpha])
    nets = _nested_nets(grid, delta, k_min, k_max, rng)
    system = DyadicSystem(alpha, grid, delta, k_min, k_max)

    # finest level: Voronoi cells of the finest net
    points = nets[k_max]
    owner = _nearest_of(grid, points, np.arange(grid.size))
    system._labels[k_max] = owner
    for level in range(k_max - 1, k_min - 1, -1):
        coarse = nets[level]
        finer = nets[level + 1]
        parent_position = _nearest_of(grid, coarse, np.asarray(finer))
        system._labels[level] = parent_position[system._labels[level + 1]]

    for level in range(k_min, k_max + 1):
        labels = system._labels[level]
        cubes = []
        for index, point in enumerate(nets[level]):
            cells = np.flatnonzero(labels == index)
            center = grid.center(point)
            cubes.append(DyadicCube(alpha, level, index, center, point, cells,
                                    clipped=_is_clipped(grid, center, OUTER_FACTOR * delta ** level)))
        system.levels[level] = cubes
    for level in range(k_min + 1, k_max + 1):
        parents = system._labels[level - 1]
        for cube in system.levels[level]:
            cube.parent = int(parents[cube.center_cell])
            system.levels[level - 1][cube.parent].children.append(cube.index)
    return system


def build_systems(grid: CellGrid, delta: float, k_min: int, k_max: int, seed: int = 0,
                  n_systems: int = 3, strict: bool = True) -> list:
    """
    ``n_systems`` adjacent dyadic systems on ``grid``. With ``strict`` the
    ratio must satisfy delta <= 1/96. Raises GridResolutionError when the
    cells are too large to resolve the finest level.
    """
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if strict and delta > STRICT_DELTA:
        raise DomainError(f"dyadic systems need delta <= 1/96, got {delta}")
    if k_max < k_min:
        raise DomainError(f"empty level range [{k_min}, {k_max}]")
    if n_systems < 1:
        raise DomainError("at least one system is needed")
    required = delta ** k_max
    if grid.cell_diameter() > required:
        raise GridResolutionError(
            f"cell diameter {grid.cell_diameter():.3g} too coarse for level {k_max}: "
            f"cells must have Koranyi diameter <= {required:.3g}")
    systems = [_build_system(alpha, grid, delta, k_min, k_max, seed) for alpha in range(n_systems)]
    logger.info("built %d dyadic systems, delta=%g, levels %d..%d, cubes per system %s",
                n_systems, delta, k_min, k_max,
                [sum(len(c) for c in s.levels.values()) for s in systems])
    return systems


def slab_grid(n: int, delta: float, k_max: int, cells: int, spread: float = 3.0) -> CellGrid:
    """
    Region [-spread delta^k_max, spread delta^k_max] along x1, one thin cell in
    every other coordinate. Cell centres have zero in those coordinates, so
    the distance along the slab is |x1 - x1'|. It holds several level k_max
    cubes and resolves balls of radius delta^{k_max+1}.
    """
    half = spread * delta ** k_max
    step = 2.0 * half / cells
    thin = 1e-3 * step
    grid = CellGrid(BoxRegion((half,) + (thin,) * (2 * n - 1) + (thin * step,)), (cells,) + (1,) * (2 * n))
    if grid.cell_diameter() >= delta ** (k_max + 1):
        raise GridResolutionError(
            f"{cells} cells cannot resolve balls of radius {delta ** (k_max + 1):.3g} along the slab")
    return grid


# --- queries ---------------------------------------------------------------------------------

def cube_average(values, cube: DyadicCube, p: float = 1.0) -> float:
    """<f>_{Q,p} = (|Q|^-1 int_Q |f|^p)^(1/p) on cell values"""
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    local = np.abs(np.asarray(values, dtype=float).reshape(-1)[cube.cells])
    if np.isinf(p):
        return float(local.max())
    return float(np.mean(local ** p) ** (1.0 / p))


def children(system: DyadicSystem, cube: DyadicCube) -> list:
    return system.children(cube)


def locate(x: HeisPoint, level: int, system: DyadicSystem) -> Optional[DyadicCube]:
    return system.locate_point(x, level)


@dataclass(frozen=True)
class SystemReport:
    alpha: int
    partition: bool
    nesting: bool
    sandwich: bool
    sandwich_checked: int
    clipped: int
    failures: tuple = ()

    @property
    def ok(self) -> bool:
        return self.partition and self.nesting and self.sandwich


def check_system(system: DyadicSystem, include_clipped: bool = False) -> SystemReport:
    """
    Partition, nesting and the ball sandwich, by enumeration over cells.
    With ``include_clipped`` boundary cubes get the sandwich too, on their
    part inside the region.
    """
    grid = system.grid
    z, t = grid.centers()
    failures = []
    partition = True
    for level, cubes in system.levels.items():
        counts = np.zeros(grid.size, dtype=np.int64)
        for cube in cubes:
            counts[cube.cells] += 1
        if not np.all(counts == 1):
            partition = False
            failures.append(f"level {level} does not partition the region")

    nesting = True
    for level in range(system.k_min + 1, system.k_max + 1):
        for cube in system.levels[level]:
            parent = system.cube(level - 1, cube.parent)
            if not np.all(np.isin(cube.cells, parent.cells)):
                nesting = False
                failures.append(f"cube {cube.key} leaks out of its parent")

    sandwich, checked, clipped = True, 0, 0
    for cube in system.cubes():
        if cube.clipped:
            clipped += 1
            if not include_clipped:
                continue
        checked += 1
        side = system.delta ** cube.level
        d = dist_arrays(cube.center.z, cube.center.t, z, t)
        member = np.zeros(grid.size, dtype=bool)
        member[cube.cells] = True
        inner_ok = np.all(member[d < INNER_FACTOR * side])
        outer_ok = np.all(d[member] < OUTER_FACTOR * side)
        if not (inner_ok and outer_ok):
            sandwich = False
            failures.append(f"cube {cube.key} breaks the ball sandwich")
    report = SystemReport(system.alpha, partition, nesting, sandwich, checked, clipped, tuple(failures))
    for failure in failures:
        logger.warning("system %d: %s", system.alpha, failure)
    return report


@dataclass(frozen=True)
class AdjacencyReport:
    tested: int
    contained: int
    skipped: int
    target_cubes: int = 0

    @property
    def ok(self) -> bool:
        return self.contained == self.tested


def check_adjacency(systems: list, balls: int = 100, seed: int = 0) -> AdjacencyReport:
    """
    Every ball B(x, r) with delta^{k+1} < r <= delta^k spanning at least one
    cell diameter must meet the region inside a single level k - 1 cube of
    some system. Only target levels with at least two cubes in every system
    are sampled; ``target_cubes`` is the smallest such cube count.
    """
    first = systems[0]
    grid, delta = first.grid, first.delta
    z, t = grid.centers()
    rng = np.random.default_rng(seed)
    widths = np.asarray(grid.region.half_widths)
    lowest = grid.cell_diameter()
    highest = float(norm_arrays(2.0 * widths[:-1], 2.0 * widths[-1]))
    ranges = []
    for target in range(first.k_min, first.k_max + 1):
        if min(len(system.levels[target]) for system in systems) < 2:
            continue
        low, high = max(delta ** (target + 2), lowest), min(delta ** (target + 1), highest)
        if low < high:
            ranges.append((target, low, high))
    if not ranges:
        logger.warning("no built level has two cubes and resolvable balls; adjacency not tested")
        return AdjacencyReport(0, 0, balls)

    contained = 0
    for _ in range(balls):
        target, low, high = ranges[int(rng.integers(len(ranges)))]
        radius = float(np.exp(rng.uniform(np.log(low), np.log(high))))
        cell = int(rng.integers(grid.size))
        center = grid.center(cell)
        ball = np.flatnonzero(dist_arrays(center.z, center.t, z, t) < radius)
        for system in systems:
            labels = system.labels(target)[ball]
            if np.all(labels == labels[0]):
                contained += 1
                break
        else:
            logger.warning("ball at cell %d with radius %.3g fits in no level-%d cube", cell, radius, target)
    fewest = min(len(system.levels[target]) for system in systems for target, _, _ in ranges)
    return AdjacencyReport(balls, contained, 0, fewest)


def doubling_constant(grid: CellGrid, samples: int = 200, seed: int = 0) -> float:
    """max |B(x, 2r)| / |B(x, r)| over random balls resolved by the grid and inside the region"""
    z, t = grid.centers()
    rng = np.random.default_rng(seed)
    low = 2.0 * grid.cell_diameter()
    high = 0.25 * min(grid.region.half_widths[:-1])
    worst = 1.0
    for _ in range(samples):
        cell = int(rng.integers(grid.size))
        radius = float(np.exp(rng.uniform(np.log(low), np.log(max(high, low * 1.01)))))
        center = grid.center(cell)
        if _is_clipped(grid, center, 2.0 * radius):
            continue
        d = dist_arrays(center.z, center.t, z, t)
        small = int(np.count_nonzero(d < radius))
        if small:
            worst = max(worst, np.count_nonzero(d < 2.0 * radius) / small)
    logger.info("measured doubling constant %.3f", worst)
    return float(worst)


def dump_systems(systems: list, path: str):
    """One JSON record per cube: alpha, k, center, cell_count, parent_id"""
    records = []
    for system in systems:
        for cube in system.cubes():
            records.append({
                "alpha": system.alpha,
                "k": cube.level,
                "index": cube.index,
                "center": [float(v) for v in cube.center.as_array()],
                "cell_count": cube.cell_count,
                "parent_id": cube.parent,
                "clipped": cube.clipped,
            })
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w") as file:
        json.dump(records, file, indent=2, sort_keys=True)
    return records
