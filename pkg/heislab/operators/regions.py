"""
Regions
-------
Exponent triangles in the (1/p, 1/q) square with exact rational vertices,
membership tests and plotting data.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction

import pandas as pd

from heislab.errors import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExponentTriangle:
    name: str
    n: int
    vertices: tuple

    def __post_init__(self):
        vertices = tuple((Fraction(x), Fraction(y)) for x, y in self.vertices)
        if len(vertices) != 3:
            raise DomainError("a triangle needs three vertices")
        if any(not (0 <= c <= 1) for v in vertices for c in v):
            raise DomainError(f"vertices of {self.name} leave the unit square")
        if _orientation(*vertices) == 0:
            raise DomainError(f"vertices of {self.name} are collinear")
        # counter-clockwise
        if _orientation(*vertices) < 0:
            vertices = (vertices[0], vertices[2], vertices[1])
        object.__setattr__(self, "vertices", vertices)

    def centroid(self) -> tuple:
        return tuple(sum(v[i] for v in self.vertices) / 3 for i in range(2))


def _orientation(a, b, c) -> Fraction:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _dual_point(point) -> tuple:
    return point[0], 1 - point[1]


def S_prime(n: int) -> ExponentTriangle:
    third = Fraction(3 * n + 1, 3 * n + 4), Fraction(3, 3 * n + 4)
    return ExponentTriangle("S_prime", n, ((0, 0), (1, 1), third))


def F_prime(n: int) -> ExponentTriangle:
    corner = Fraction(2 * n - 1, 2 * n)
    third = Fraction(3 * n + 1, 3 * n + 7), Fraction(6, 3 * n + 7)
    return ExponentTriangle("F_prime", n, ((0, 0), (corner, corner), third))


def dual(tri: ExponentTriangle, name: str = "") -> ExponentTriangle:
    """(1/p, 1/q) -> (1/p, 1 - 1/q)"""
    return ExponentTriangle(name or f"dual_{tri.name}", tri.n, tuple(_dual_point(v) for v in tri.vertices))


def S(n: int) -> ExponentTriangle:
    return dual(S_prime(n), "S")


def F(n: int) -> ExponentTriangle:
    return dual(F_prime(n), "F")


def lacunary_sparse(n: int) -> ExponentTriangle:
    return dual(S_prime(n), "lacunary_sparse")


def full_sparse(n: int) -> ExponentTriangle:
    return dual(F_prime(n), "full_sparse")


def euclidean_lacunary(n: int) -> ExponentTriangle:
    corner = Fraction(n, n + 1)
    return ExponentTriangle("euclidean_lacunary", n, ((0, 1), (1, 0), (corner, corner)))


TRIANGLES = {
    "S_prime": S_prime,
    "S": S,
    "F_prime": F_prime,
    "F": F,
    "lacunary_sparse": lacunary_sparse,
    "full_sparse": full_sparse,
    "euclidean_lacunary": euclidean_lacunary,
}


def triangle(name: str, n: int) -> ExponentTriangle:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    try:
        return TRIANGLES[name](n)
    except KeyError:
        raise DomainError(f"unknown triangle {name!r}; choose from {sorted(TRIANGLES)}") from None


def contains(tri: ExponentTriangle, point, strict: bool = True) -> bool:
    """Barycentric sign test in exact arithmetic; strict excludes the edges"""
    p = (Fraction(point[0]), Fraction(point[1]))
    a, b, c = tri.vertices
    signs = (_orientation(a, b, p), _orientation(b, c, p), _orientation(c, a, p))
    if strict:
        return all(s > 0 for s in signs)
    return all(s >= 0 for s in signs)


def triangle_inside(inner: ExponentTriangle, outer: ExponentTriangle) -> bool:
    """Closed inclusion: every vertex of ``inner`` lies in closed ``outer``"""
    return all(contains(outer, v, strict=False) for v in inner.vertices)


def boundary_polyline(tri: ExponentTriangle, samples_per_edge: int = 16) -> list:
    """Closed polyline through the edges as float pairs, for plotting"""
    points = []
    vertices = tri.vertices + (tri.vertices[0],)
    for start, end in zip(vertices[:-1], vertices[1:]):
        for i in range(samples_per_edge):
            s = Fraction(i, samples_per_edge)
            points.append((float(start[0] + s * (end[0] - start[0])),
                           float(start[1] + s * (end[1] - start[1]))))
    points.append((float(tri.vertices[0][0]), float(tri.vertices[0][1])))
    return points


def vertex_table(n: int, names=None) -> pd.DataFrame:
    rows = []
    for name in names or TRIANGLES:
        tri = triangle(name, n)
        for i, (x, y) in enumerate(tri.vertices):
            rows.append({"triangle": name, "n": n, "vertex": i,
                         "p_inv": str(x), "q_inv": str(y),
                         "p_inv_float": float(x), "q_inv_float": float(y)})
    return pd.DataFrame(rows)
