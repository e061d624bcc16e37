"""Exact geometric (Minkowski) sums of ellipsoids.

The support function of a sum is the sum of the terms' support functions,
and the boundary point with outer normal ``ell`` is the sum of the terms'
own support points::

    x(ell) = sum_i Q_i ell / sqrt(ell^T Q_i ell) + sum_i c_i

Sweeping ``ell`` over the unit sphere traces the whole boundary.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._parallel import map_rows
from .core import DimensionMismatch, Ellipsoid, as_directions, unit_vector


@dataclass(frozen=True, eq=False)
class EllipsoidSum:
    terms: tuple

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ValueError("a sum needs at least one ellipsoid")
        if not all(isinstance(t, Ellipsoid) for t in terms):
            raise TypeError("terms must be Ellipsoid instances")
        n = terms[0].dim
        if any(t.dim != n for t in terms):
            raise DimensionMismatch("all terms must share one dimension")
        object.__setattr__(self, "terms", terms)

    @property
    def dim(self) -> int:
        return self.terms[0].dim

    @property
    def k(self) -> int:
        return len(self.terms)

    @cached_property
    def shapes(self):
        return np.stack([t.shape for t in self.terms])

    @cached_property
    def factors(self):
        return np.stack([t.factor for t in self.terms])

    @cached_property
    def center(self):
        return np.sum([t.center for t in self.terms], axis=0)

    @cached_property
    def traces(self):
        return np.trace(self.shapes, axis1=1, axis2=2)


@dataclass(frozen=True, eq=False)
class BoundarySample:
    direction: np.ndarray
    point: np.ndarray
    support: float


@dataclass(frozen=True, eq=False)
class DirectionGrid:
    directions: np.ndarray
    scheme: str
    seed: int = 0

    @property
    def count(self) -> int:
        return self.directions.shape[0]

    @property
    def dim(self) -> int:
        return self.directions.shape[1]


@dataclass(frozen=True, eq=False)
class ContainmentReport:
    """Per-direction margins ``support(bound) - sum_support``.

    ``contained`` means contained on the grid only; it is a necessary
    condition for true containment.
    """

    margins: np.ndarray
    grid: DirectionGrid
    tol: float

    @property
    def min_margin(self) -> float:
        return float(self.margins.min())

    @property
    def witness(self):
        """Direction of the smallest margin (closest approach to tangency)."""
        return self.grid.directions[int(np.argmin(self.margins))]

    @property
    def contained(self) -> bool:
        return bool(self.min_margin >= -self.tol)

    @property
    def verdict(self) -> str:
        return "contained on grid" if self.contained else "not contained"


def ellipsoid_sum(terms) -> EllipsoidSum:
    return EllipsoidSum(tuple(terms))


def _term_radii(S, ell):
    # (k, m): sqrt(ell^T Q_i ell) for every term and direction
    w = np.einsum("mn,kna->kma", ell, S.factors)
    return np.linalg.norm(w, axis=-1)


def _sum_support_rows(S, ell):
    return ell @ S.center + _term_radii(S, ell).sum(axis=0)


def sum_support(S: EllipsoidSum, ell):
    """Support function of the sum: ``sum_i <ell, c_i> + sqrt(ell^T Q_i ell)``."""
    ell = as_directions(ell, S.dim)
    if ell.ndim == 1:
        return float(_sum_support_rows(S, ell[None, :])[0])
    return map_rows(lambda rows: _sum_support_rows(S, rows), ell)


def _boundary_rows(S, ell):
    w = np.einsum("mn,kna->kma", ell, S.factors)
    radii = np.linalg.norm(w, axis=-1, keepdims=True)
    pts = np.einsum("kma,kna->mn", w / radii, S.factors)
    return pts + S.center


def boundary_points(S: EllipsoidSum, ell):
    """Boundary points for a stack of directions, shape ``(m, n)``."""
    ell = as_directions(np.atleast_2d(ell), S.dim)
    return map_rows(lambda rows: _boundary_rows(S, rows), ell)


def boundary_point(S: EllipsoidSum, ell) -> BoundarySample:
    ell = as_directions(ell, S.dim)
    if ell.ndim != 1:
        raise DimensionMismatch("boundary_point takes a single direction")
    point = _boundary_rows(S, ell[None, :])[0]
    return BoundarySample(ell.copy(), point, sum_support(S, ell))


def sample_boundary(S: EllipsoidSum, grid: DirectionGrid) -> list:
    """One :class:`BoundarySample` per grid direction, in grid order."""
    if grid.dim != S.dim:
        raise DimensionMismatch(f"grid dimension {grid.dim} does not match sum dimension {S.dim}")
    pts = boundary_points(S, grid.directions)
    vals = sum_support(S, grid.directions)
    return [BoundarySample(d, p, float(v)) for d, p, v in zip(grid.directions, pts, vals)]


def default_grid_count(n: int) -> int:
    if n == 2:
        return 720
    if n == 3:
        return 2562
    return max(2, 10 * n * n)


def make_direction_grid(n: int, count: int | None = None, seed: int = 0) -> DirectionGrid:
    """Deterministic unit directions in dimension ``n``.

    * ``n == 2``: ``count`` equispaced angles starting at angle 0.
    * ``n == 3``: Fibonacci sphere (golden-angle spiral).
    * ``n == 1``: alternating ``+1`` and ``-1``.
    * ``n > 3``: normalized Gaussian draws from ``numpy.random.default_rng(seed)``.
    """
    if count is None:
        count = default_grid_count(n)
    if count < 1:
        raise ValueError("grid count must be positive")
    if n < 1:
        raise ValueError("dimension must be positive")
    if n == 1:
        dirs = np.where(np.arange(count) % 2 == 0, 1.0, -1.0)[:, None]
        scheme = "line"
    elif n == 2:
        theta = 2.0 * np.pi * np.arange(count) / count
        dirs = np.column_stack([np.cos(theta), np.sin(theta)])
        scheme = "circle-uniform"
    elif n == 3:
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        r = np.sqrt(1.0 - z * z)
        phi = np.pi * (3.0 - np.sqrt(5.0)) * i
        dirs = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
        scheme = "fibonacci-sphere"
    else:
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((count, n))
        dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
        scheme = "random-gaussian-normalized"
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs.setflags(write=False)
    return DirectionGrid(dirs, scheme, seed)


def check_containment(bound: Ellipsoid, S: EllipsoidSum, grid: DirectionGrid, tol=1e-9):
    """Compare ``support(bound, ell)`` with ``sum_support(S, ell)`` on the grid."""
    if bound.dim != S.dim or grid.dim != S.dim:
        raise DimensionMismatch("bound, sum and grid must share one dimension")
    d = grid.directions
    bound_support = d @ bound.center + np.linalg.norm(d @ bound.factor, axis=1)
    margins = bound_support - sum_support(S, d)
    return ContainmentReport(margins, grid, tol)


def boundary_csv(samples) -> str:
    """CSV text ``l1..ln, x1..xn, support`` with 17 significant digits."""
    samples = list(samples)
    n = samples[0].direction.shape[0] if samples else 0
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"l{i + 1}" for i in range(n)] + [f"x{i + 1}" for i in range(n)] + ["support"])
    for s in samples:
        row = list(s.direction) + list(s.point) + [s.support]
        writer.writerow([format(float(v), ".17g") for v in row])
    return buf.getvalue()


def read_boundary_csv(text: str):
    """Parse :func:`boundary_csv` output back into ``(directions, points, supports)``."""
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    n = (len(header) - 1) // 2
    data = np.array(body, dtype=float).reshape(len(body), 2 * n + 1)
    return data[:, :n], data[:, n : 2 * n], data[:, 2 * n]


__all__ = [
    "BoundarySample",
    "ContainmentReport",
    "DirectionGrid",
    "EllipsoidSum",
    "boundary_csv",
    "boundary_point",
    "boundary_points",
    "check_containment",
    "default_grid_count",
    "ellipsoid_sum",
    "make_direction_grid",
    "read_boundary_csv",
    "sample_boundary",
    "sum_support",
    "unit_vector",
]
