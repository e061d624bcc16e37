"""Ellipsoids, their support functions and affine images.

An ellipsoid ``E(Q, c)`` is the set ``{x : (x - c)^T Q^{-1} (x - c) <= 1}``
with symmetric positive definite shape matrix ``Q``.  Every ellipsoid keeps
a lower-triangular factor ``L`` with ``Q = L L^T``.  Support functions and
boundary points are evaluated through the factor, which keeps them accurate
for very eccentric (numerically near-flat) ellipsoids such as the images of
a unit ball under high powers of a stable matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYMMETRY_RTOL = 1e-10
UNIT_NORM_TOL = 1e-9


class DimensionMismatch(ValueError):
    pass


class NonSymmetric(ValueError):
    pass


class NotPositiveDefinite(ValueError):
    pass


class RankDeficient(NotPositiveDefinite):
    """The image of an ellipsoid under a linear map is flat."""


class NotUnitVector(ValueError):
    pass


class RecordError(ValueError):
    """A JSON record is structurally malformed (missing field, ragged, non-numeric)."""


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """Validated ellipsoid; build it with :func:`make_ellipsoid`."""

    center: np.ndarray
    shape: np.ndarray
    factor: np.ndarray

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.shape))

    def __repr__(self):
        return f"Ellipsoid(center={self.center.tolist()}, shape={self.shape.tolist()})"


def symmetrize(Q, rtol=SYMMETRY_RTOL):
    """Return ``(Q + Q^T) / 2``, raising :class:`NonSymmetric` when the
    asymmetry exceeds ``rtol * max|Q|``."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise DimensionMismatch(f"shape matrix must be square, got {Q.shape}")
    if not np.all(np.isfinite(Q)):
        raise ValueError("shape matrix has non-finite entries")
    scale = np.max(np.abs(Q)) if Q.size else 0.0
    asym = np.max(np.abs(Q - Q.T)) if Q.size else 0.0
    if asym > rtol * scale:
        raise NonSymmetric(f"asymmetry {asym:.3e} exceeds tolerance {rtol * scale:.3e}")
    return 0.5 * (Q + Q.T)


def cholesky_factor(Q):
    """Lower Cholesky factor of a symmetric matrix; raises on non-PD input."""
    try:
        return np.linalg.cholesky(Q)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("shape matrix is not positive definite") from exc


def make_ellipsoid(shape, center=None) -> Ellipsoid:
    """Validate ``shape`` (and ``center``, default origin) into an Ellipsoid.

    Asymmetry below ``1e-10 * max|Q|`` is removed by symmetrizing; larger
    asymmetry raises :class:`NonSymmetric`.  Positive definiteness is decided
    by a Cholesky factorization.
    """
    Q = symmetrize(shape)
    n = Q.shape[0]
    if n < 1:
        raise DimensionMismatch("dimension must be at least 1")
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    if c.shape != (n,):
        raise DimensionMismatch(f"center has shape {c.shape}, expected ({n},)")
    if not np.all(np.isfinite(c)):
        raise ValueError("center has non-finite entries")
    L = cholesky_factor(Q)
    return Ellipsoid(_frozen(c), _frozen(Q), _frozen(L))


def _factor_from_columns(G):
    """Lower-triangular ``L`` with ``L L^T = G G^T`` via QR of ``G^T``.

    Avoids forming ``G G^T`` before factorizing, so eccentric products keep
    their accuracy.
    """
    n, p = G.shape
    if p < n:
        raise RankDeficient(f"factor with {p} columns cannot span dimension {n}")
    R = np.linalg.qr(G.T, mode="r")[:n, :n]
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return (R * signs[:, None]).T


def ellipsoid_from_factor(G, center=None) -> Ellipsoid:
    """Ellipsoid with shape ``G G^T`` for a factor ``G`` known to have full
    row rank.  The caller vouches for the rank; no Cholesky is attempted on
    the product, which may be numerically singular even when it is not."""
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    if c.shape != (n,):
        raise DimensionMismatch(f"center has shape {c.shape}, expected ({n},)")
    L = _factor_from_columns(G)
    Q = L @ L.T
    Q = 0.5 * (Q + Q.T)
    return Ellipsoid(_frozen(c), _frozen(Q), _frozen(L))


def unit_vector(v):
    """Normalize ``v`` to unit Euclidean length."""
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if not np.isfinite(norm) or norm == 0.0:
        raise NotUnitVector("cannot normalize a zero or non-finite vector")
    return v / norm


def as_directions(ell, n, tol=UNIT_NORM_TOL):
    """Check a direction ``(n,)`` or a stack of directions ``(m, n)``."""
    ell = np.asarray(ell, dtype=float)
    if ell.shape[-1] != n or ell.ndim not in (1, 2):
        raise DimensionMismatch(f"direction shape {ell.shape} does not match dimension {n}")
    norms = np.linalg.norm(ell, axis=-1)
    if np.any(np.abs(norms - 1.0) > tol):
        raise NotUnitVector("directions must have unit Euclidean norm")
    return ell


def support(E: Ellipsoid, ell):
    """Support function ``<ell, c> + sqrt(ell^T Q ell)``.

    ``ell`` may be a single unit vector (returns a float) or an ``(m, n)``
    stack of unit vectors (returns an array of length ``m``).
    """
    ell = as_directions(ell, E.dim)
    radius = np.linalg.norm(ell @ E.factor, axis=-1)
    value = ell @ E.center + radius
    return float(value) if ell.ndim == 1 else value


def support_point(E: Ellipsoid, ell):
    """Boundary point of ``E`` whose outer normal is ``ell``:
    ``Q ell / sqrt(ell^T Q ell) + c``."""
    ell = as_directions(ell, E.dim)
    w = ell @ E.factor  # rows are L^T ell
    radius = np.linalg.norm(w, axis=-1, keepdims=True)
    return (w / radius) @ E.factor.T + E.center


def affine_image(E: Ellipsoid, M, b=None) -> Ellipsoid:
    """Image ``{M x + b : x in E}``, the ellipsoid with shape ``M Q M^T`` and
    center ``M c + b``.

    Raises :class:`RankDeficient` when ``M`` does not have full row rank, in
    which case the image is a flat ellipsoid.  The rank test is applied to
    ``M`` itself: for positive definite ``Q`` the image is positive definite
    exactly when ``M`` has full row rank, even if ``M Q M^T`` is too
    eccentric to pass a Cholesky factorization in floating point.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[1] != E.dim:
        raise DimensionMismatch(f"map of shape {M.shape} cannot act on dimension {E.dim}")
    m = M.shape[0]
    b = np.zeros(m) if b is None else np.asarray(b, dtype=float)
    if b.shape != (m,):
        raise DimensionMismatch(f"offset has shape {b.shape}, expected ({m},)")
    G = M @ E.factor
    if m > E.dim or np.linalg.matrix_rank(M) < m:
        raise RankDeficient("linear map is not of full row rank; the image is flat")
    return ellipsoid_from_factor(G, M @ E.center + b)


def contains_point(E: Ellipsoid, x, tol=0.0) -> bool:
    """True iff ``(x - c)^T Q^{-1} (x - c) <= 1 + tol``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (E.dim,):
        raise DimensionMismatch(f"point shape {x.shape} does not match dimension {E.dim}")
    return bool(mahalanobis_sq(E, x) <= 1.0 + tol)


def mahalanobis_sq(E: Ellipsoid, x):
    """``(x - c)^T Q^{-1} (x - c)`` for a point or an ``(m, n)`` stack."""
    x = np.asarray(x, dtype=float)
    d = (x - E.center).T
    # Q^{-1} via the triangular factor: ||L^{-1} d||^2
    z = np.linalg.solve(E.factor, d)
    return np.sum(z * z, axis=0)


def ellipsoid_to_dict(E: Ellipsoid) -> dict:
    return {"center": E.center.tolist(), "shape": E.shape.tolist()}


def _matrix(value, name):
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise RecordError(f"{name} must be a non-empty list of rows")
    width = len(value[0])
    if any(len(r) != width for r in value):
        raise RecordError(f"{name} is ragged")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for r in value for v in r):
        raise RecordError(f"{name} has non-numeric entries")
    arr = np.array(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise RecordError(f"{name} has non-finite entries")
    return arr


def ellipsoid_from_dict(record) -> Ellipsoid:
    """Parse ``{"center": [...], "shape": [[...], ...]}``; ``center`` is
    optional and defaults to the origin."""
    if not isinstance(record, dict):
        raise RecordError("ellipsoid record must be an object")
    if "shape" not in record:
        raise RecordError("ellipsoid record is missing 'shape'")
    shape = _matrix(record["shape"], "shape")
    center = record.get("center")
    if center is not None:
        if not isinstance(center, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in center
        ):
            raise RecordError("center must be a list of numbers")
        center = np.array(center, dtype=float)
        if not np.all(np.isfinite(center)):
            raise RecordError("center has non-finite entries")
    return make_ellipsoid(shape, center)
