"""
Heisenberg Core
---------------
Group law, Koranyi norm, left-invariant quasi-metric, non-isotropic
dilations, balls and box regions on H^n = C^n x R.

Points are stored with z as interleaved real pairs (x1, y1, x2, y2, ...),
so every routine has a scalar form on HeisPoint and a vectorised form on
arrays ``z`` of shape (..., 2n) and ``t`` of shape (...).
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from heislab.errors import DimensionMismatch, DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HeisPoint:
    """A point (z, t) of H^n with z kept as 2n interleaved reals"""
    z: np.ndarray
    t: float

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float).reshape(-1)
        if z.size == 0 or z.size % 2:
            raise DimensionMismatch(f"z needs 2n real coordinates, got {z.size}")
        if not (np.all(np.isfinite(z)) and np.isfinite(self.t)):
            raise DomainError("HeisPoint coordinates must be finite")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def from_complex(cls, zc, t: float) -> "HeisPoint":
        zc = np.atleast_1d(np.asarray(zc, dtype=complex))
        z = np.empty(2 * zc.size)
        z[0::2] = zc.real
        z[1::2] = zc.imag
        return cls(z, t)

    @classmethod
    def identity(cls, n: int) -> "HeisPoint":
        return cls(np.zeros(2 * n), 0.0)

    @property
    def n(self) -> int:
        return self.z.size // 2

    @property
    def complex_z(self) -> np.ndarray:
        return self.z[0::2] + 1j * self.z[1::2]

    def as_array(self) -> np.ndarray:
        return np.append(self.z, self.t)

    def __mul__(self, other: "HeisPoint") -> "HeisPoint":
        return group_mul(self, other)

    def __eq__(self, other):
        if not isinstance(other, HeisPoint):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.z, other.z) and self.t == other.t

    def __hash__(self):
        return hash((self.z.tobytes(), self.t))


@dataclass(frozen=True)
class BoxRegion:
    """Box [-L_i, L_i] in each real coordinate of z and in t (last entry)"""
    half_widths: tuple

    def __post_init__(self):
        widths = tuple(float(w) for w in self.half_widths)
        if len(widths) < 3 or len(widths) % 2 == 0:
            raise DimensionMismatch(f"BoxRegion needs 2n+1 half-widths, got {len(widths)}")
        if min(widths) <= 0:
            raise DomainError("BoxRegion half-widths must be strictly positive")
        object.__setattr__(self, "half_widths", widths)

    @classmethod
    def isotropic(cls, n: int, z_half: float, t_half: float) -> "BoxRegion":
        return cls((z_half,) * (2 * n) + (t_half,))

    @property
    def n(self) -> int:
        return (len(self.half_widths) - 1) // 2

    @property
    def volume(self) -> float:
        return float(np.prod([2.0 * w for w in self.half_widths]))

    def contains(self, z, t) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        t = np.asarray(t, dtype=float)
        lz = np.asarray(self.half_widths[:-1])
        inside_z = np.all(np.abs(z) <= lz, axis=-1)
        return inside_z & (np.abs(t) <= self.half_widths[-1])


# --- vectorised kernels --------------------------------------------------------

def twist(z, w) -> np.ndarray:
    """Im z . conj(w) for interleaved arrays, summed over the n complex slots"""
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    return np.sum(z[..., 1::2] * w[..., 0::2] - z[..., 0::2] * w[..., 1::2], axis=-1)


def mul_arrays(z1, t1, z2, t2):
    """(z,t)(w,s) = (z+w, t+s+1/2 Im z.conj(w)) on broadcast arrays"""
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    if z1.shape[-1] != z2.shape[-1]:
        raise DimensionMismatch(f"dimension mismatch: {z1.shape[-1] // 2} vs {z2.shape[-1] // 2}")
    return z1 + z2, np.asarray(t1) + np.asarray(t2) + 0.5 * twist(z1, z2)


def norm_arrays(z, t) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    r2 = np.sum(z * z, axis=-1)
    return (r2 * r2 + np.asarray(t, dtype=float) ** 2) ** 0.25


def dist_arrays(z1, t1, z2, t2) -> np.ndarray:
    """d_L(x, y) = |x^{-1} y| on broadcast arrays"""
    dz, dt = mul_arrays(-np.asarray(z1, dtype=float), -np.asarray(t1, dtype=float), z2, t2)
    return norm_arrays(dz, dt)


# --- point operations -------------------------------------------------------------

def _check_same_n(a: HeisPoint, b: HeisPoint):
    if a.n != b.n:
        raise DimensionMismatch(f"points live in H^{a.n} and H^{b.n}")


def group_mul(a: HeisPoint, b: HeisPoint) -> HeisPoint:
    _check_same_n(a, b)
    z, t = mul_arrays(a.z, a.t, b.z, b.t)
    return HeisPoint(z, float(t))


def group_inv(a: HeisPoint) -> HeisPoint:
    return HeisPoint(-a.z, -a.t)


def koranyi_norm(a: HeisPoint) -> float:
    return float(norm_arrays(a.z, a.t))


def dist_left(x: HeisPoint, y: HeisPoint) -> float:
    _check_same_n(x, y)
    return float(dist_arrays(x.z, x.t, y.z, y.t))


def dilate(r: float, a: HeisPoint) -> HeisPoint:
    if not r > 0:
        raise DomainError(f"dilation factor must be positive, got {r}")
    return HeisPoint(r * a.z, r * r * a.t)


def ball_contains(center: HeisPoint, radius: float, x: HeisPoint) -> bool:
    """Membership in the open ball B(center, radius) = {x : |center^{-1} x| < radius}"""
    if not radius > 0:
        raise DomainError(f"ball radius must be positive, got {radius}")
    return dist_left(center, x) < radius


def random_points(rng: np.random.Generator, n: int, size: int, scale: float = 1.0):
    """Random (z, t) arrays with Gaussian coordinates, t scaled like |z|^2"""
    z = rng.normal(scale=scale, size=(size, 2 * n))
    t = rng.normal(scale=scale * scale, size=size)
    return z, t


def quasi_triangle_constant(n: int, samples: int = 20000, seed: int = 0) -> float:
    """
    Measured constant A0 with d(x,y) <= A0 (d(x,w) + d(w,y)) over random triples.
    The Koranyi gauge used here is a quasi-metric; no constant is assumed.
    """
    rng = np.random.default_rng(seed)
    scales = np.exp(rng.uniform(-2.0, 2.0, size=(samples, 1)))
    zs, ts = [], []
    for _ in range(3):
        z, t = random_points(rng, n, samples)
        zs.append(z * scales)
        ts.append(t * scales[:, 0] ** 2)
    dxy = dist_arrays(zs[0], ts[0], zs[2], ts[2])
    via = dist_arrays(zs[0], ts[0], zs[1], ts[1]) + dist_arrays(zs[1], ts[1], zs[2], ts[2])
    ratio = dxy[via > 0] / via[via > 0]
    constant = float(max(1.0, ratio.max()))
    logger.info("quasi-triangle constant for n=%d measured as %.6f over %d triples", n, constant, samples)
    return constant


@dataclass(frozen=True)
class CellGrid:
    """
    Uniform decomposition of a BoxRegion into cells. On every axis the
    cell-centre nodes sit at -L + (i + 1/2) h, i = 0 .. N-1, with h = 2L/N.
    Cells are numbered in C order over (x1, y1, ..., xn, yn, t).
    """
    region: BoxRegion
    cells: tuple

    def __post_init__(self):
        cells = tuple(int(c) for c in self.cells)
        if len(cells) != len(self.region.half_widths):
            raise DimensionMismatch(
                f"grid needs {len(self.region.half_widths)} cell counts, got {len(cells)}")
        if min(cells) < 1:
            raise DomainError("every axis needs at least one cell")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def isotropic(cls, region: BoxRegion, z_cells: int, t_cells: int) -> "CellGrid":
        return cls(region, (z_cells,) * (2 * region.n) + (t_cells,))

    @property
    def n(self) -> int:
        return self.region.n

    @property
    def size(self) -> int:
        return int(np.prod(self.cells))

    @property
    def spacings(self) -> tuple:
        return tuple(2.0 * w / c for w, c in zip(self.region.half_widths, self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    @property
    def axes(self) -> list:
        return [-w + (np.arange(c) + 0.5) * h
                for w, c, h in zip(self.region.half_widths, self.cells, self.spacings)]

    @cached_property
    def _centers(self):
        mesh = np.meshgrid(*self.axes, indexing="ij")
        flat = np.stack([m.reshape(-1) for m in mesh], axis=-1)
        z = np.ascontiguousarray(flat[:, :-1])
        t = np.ascontiguousarray(flat[:, -1])
        z.setflags(write=False)
        t.setflags(write=False)
        return z, t

    def centers(self):
        """Cell centres as (z, t) with shapes (size, 2n) and (size,)"""
        return self._centers

    def center(self, index: int) -> HeisPoint:
        z, t = self._centers
        return HeisPoint(z[index], t[index])

    def locate(self, z, t) -> np.ndarray:
        """Flat index of the cell containing each point, -1 outside the region"""
        coords = np.concatenate([np.asarray(z, dtype=float),
                                 np.asarray(t, dtype=float)[..., None]], axis=-1)
        widths = np.asarray(self.region.half_widths)
        steps = np.asarray(self.spacings)
        counts = np.asarray(self.cells)
        idx = np.floor((coords + widths) / steps).astype(np.int64)
        # the closed upper face belongs to the last cell
        idx = np.where(np.isclose(coords, widths), counts - 1, idx)
        inside = np.all((idx >= 0) & (idx < counts), axis=-1)
        flat = np.ravel_multi_index(tuple(np.clip(idx, 0, counts - 1)[..., i]
                                          for i in range(len(counts))), self.cells)
        return np.where(inside, flat, -1)

    def cell_diameter(self) -> float:
        """Koranyi size of a full cell diagonal"""
        steps = np.asarray(self.spacings)
        return float(norm_arrays(steps[:-1], steps[-1]))

    def refine(self, factor: int = 2) -> "CellGrid":
        return CellGrid(self.region, tuple(c * factor for c in self.cells))


def as_arrays(x):
    """(z, t) arrays of shapes (P, 2n) and (P,) from a HeisPoint or a (z, t) pair"""
    if isinstance(x, HeisPoint):
        return x.z[None, :], np.array([x.t])
    z, t = x
    z = np.atleast_2d(np.asarray(z, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if z.shape[0] != t.shape[0]:
        raise DimensionMismatch(f"{z.shape[0]} z rows against {t.shape[0]} t values")
    return z, t
