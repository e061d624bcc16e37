"""Outer ellipsoidal bounds on a geometric sum of ellipsoids.

Every bound here has the form ``Q = Q0 + Q_base`` where ``Q_base`` is either

* the pair-weighted combination
  ``Q_u = sum_i Q_i + sum_{i<j} (p_ij Q_i + Q_j / p_ij)`` for positive
  weights ``p_ij``, or
* the tangent combination
  ``Q_ell = (sum_i r_i) (sum_i Q_i / r_i)`` with ``r_i = sqrt(ell^T Q_i ell)``,

and ``Q0`` is a symmetric regularizer (zero by default) that must keep
``Q`` positive definite and must not let the bound's support function drop
below the sum's.  Pair indices are zero-based: ``(i, j)`` with ``0 <= i < j < k``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .core import (
    DimensionMismatch,
    Ellipsoid,
    as_directions,
    make_ellipsoid,
    symmetrize,
)
from .minkowski import (
    DirectionGrid,
    EllipsoidSum,
    boundary_point,
    check_containment,
    make_direction_grid,
    sum_support,
)

KERNEL_RTOL = 1e-10
WEIGHT_CLAMP = (1e-6, 1e6)


class InfeasibleRegularizer(ValueError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class KernelViolation(InfeasibleRegularizer):
    pass


class IncompleteWeights(ValueError):
    pass


class InfeasibleBase(ValueError):
    pass


@dataclass(frozen=True)
class PairWeights:
    """Positive weights ``p_ij`` keyed by zero-based pairs ``i < j``."""

    k: int
    weights: dict = field(default_factory=dict)

    def __post_init__(self):
        for (i, j), p in self.weights.items():
            if not 0 <= i < j < self.k:
                raise IncompleteWeights(f"pair {(i, j)} is outside 0 <= i < j < {self.k}")
            if not (np.isfinite(p) and p > 0):
                raise ValueError(f"weight p{(i, j)} must be positive, got {p}")

    def __getitem__(self, pair):
        return self.weights[pair]

    def __len__(self):
        return len(self.weights)

    def complete(self) -> bool:
        return all(pair in self.weights for pair in pairs(self.k))

    @classmethod
    def constant(cls, k, value=1.0):
        return cls(k, {pair: float(value) for pair in pairs(k)})


@dataclass(frozen=True, eq=False)
class FeasibilityReport:
    pd_ok: bool
    support_ok: bool
    min_margin: float
    grid: DirectionGrid
    kernel_ok: bool | None = None
    witness: np.ndarray | None = None
    trace_reduction: float | None = None

    @property
    def feasible(self) -> bool:
        return self.pd_ok and self.support_ok and self.kernel_ok is not False

    def to_dict(self) -> dict:
        out = {
            "pd_ok": self.pd_ok,
            "support_ok": self.support_ok,
            "min_margin": self.min_margin,
            "grid_count": self.grid.count,
            "grid_scheme": self.grid.scheme,
        }
        if self.kernel_ok is not None:
            out["kernel_ok"] = self.kernel_ok
        if self.trace_reduction is not None:
            out["trace_reduction"] = self.trace_reduction
        return out


@dataclass(frozen=True, eq=False)
class RegularizerMatrix:
    matrix: np.ndarray
    certificate: FeasibilityReport


@dataclass(frozen=True, eq=False)
class TangentBound:
    ellipsoid: Ellipsoid
    tangency_point: np.ndarray
    direction: np.ndarray


@dataclass(frozen=True)
class RefineOptions:
    """Settings for :func:`refine_q0`.

    slack
        Relative safety margin on the squared support constraints of the
        linear program.
    min_improvement
        Smallest trace reduction, relative to ``tr(base)``, that counts as
        an improvement; anything less returns ``Q0 = 0``.
    tol
        Margin tolerance for the final feasibility check.
    """

    slack: float = 1e-7
    min_improvement: float = 1e-9
    tol: float = 1e-9


def pairs(k):
    return list(itertools.combinations(range(k), 2))


def pair_shape(S: EllipsoidSum, p: PairWeights):
    """``Q_u = sum_i Q_i + sum_{i<j} (p_ij Q_i + Q_j / p_ij)``."""
    if p.k != S.k or not p.complete():
        raise IncompleteWeights(f"weights must cover all {len(pairs(S.k))} pairs of {S.k} terms")
    Q = S.shapes.sum(axis=0)
    for (i, j), w in p.weights.items():
        Q = Q + w * S.shapes[i] + S.shapes[j] / w
    return Q


def tangent_shape(S: EllipsoidSum, ell):
    """``Q_ell = (sum_i r_i)(sum_i Q_i / r_i)`` with ``r_i = sqrt(ell^T Q_i ell)``."""
    ell = as_directions(ell, S.dim)
    r = np.linalg.norm(ell @ S.factors, axis=-1)
    return r.sum() * np.einsum("k,kab->ab", 1.0 / r, S.shapes)


def tangent_weights(S: EllipsoidSum, ell) -> PairWeights:
    """Weights ``p_ij = r_j / r_i`` for which ``Q_u`` equals ``Q_ell``."""
    ell = as_directions(ell, S.dim)
    r = np.linalg.norm(ell @ S.factors, axis=-1)
    return PairWeights(S.k, {(i, j): float(r[j] / r[i]) for i, j in pairs(S.k)})


def optimal_p(S: EllipsoidSum) -> PairWeights:
    """Trace-minimizing weights ``p_ij = sqrt(tr Q_j / tr Q_i)``.

    With a single term there are no pairs and the weights are empty.
    """
    t = S.traces
    return PairWeights(S.k, {(i, j): float(np.sqrt(t[j] / t[i])) for i, j in pairs(S.k)})


def clamp_weights(p: PairWeights) -> PairWeights:
    lo, hi = WEIGHT_CLAMP
    return PairWeights(p.k, {pair: float(np.clip(w, lo, hi)) for pair, w in p.weights.items()})


def _as_q0(q0, n):
    if q0 is None:
        return np.zeros((n, n))
    q0 = np.asarray(q0, dtype=float)
    if q0.shape != (n, n):
        raise DimensionMismatch(f"regularizer has shape {q0.shape}, expected ({n}, {n})")
    if not np.any(q0):
        return np.zeros((n, n))
    return symmetrize(q0)


def _feasibility(S, base_shape, q0, grid, tol, direction=None, center=None):
    # bounds are placed at ``center`` (default: the sum's center)
    center = S.center if center is None else center
    Q = base_shape + q0
    try:
        np.linalg.cholesky(Q)
        pd_ok = True
    except np.linalg.LinAlgError:
        pd_ok = False
    d = grid.directions
    quad = np.einsum("ma,ab,mb->m", d, Q, d)
    margins = np.sqrt(np.clip(quad, 0.0, None)) + d @ center - sum_support(S, d)
    i_min = int(np.argmin(margins))
    min_margin = float(margins[i_min])
    kernel_ok = None
    if direction is not None:
        scale = np.linalg.norm(q0)
        kernel_ok = bool(scale == 0.0 or np.linalg.norm(q0 @ direction) <= KERNEL_RTOL * scale)
    return FeasibilityReport(
        pd_ok=pd_ok,
        support_ok=bool(min_margin >= -tol),
        min_margin=min_margin,
        grid=grid,
        kernel_ok=kernel_ok,
        witness=d[i_min].copy(),
    )


def _grid_for(S, grid):
    grid = make_direction_grid(S.dim) if grid is None else grid
    if grid.dim != S.dim:
        raise DimensionMismatch(f"grid dimension {grid.dim} does not match sum dimension {S.dim}")
    return grid


def verify_regularizer(S: EllipsoidSum, q0, base=None, grid=None, tol=1e-9) -> FeasibilityReport:
    """Check ``q0`` against a base bound without raising.

    ``base`` selects the base shape matrix:

    * :class:`PairWeights` -- the pair-weighted ``Q_u`` (default: optimal weights),
    * a 1-D array -- the tangent ``Q_ell`` for that unit direction; the
      report then also carries ``kernel_ok`` (``q0 @ ell == 0``),
    * an :class:`Ellipsoid` or a square matrix -- used as is.
    """
    grid = _grid_for(S, grid)
    q0 = _as_q0(q0, S.dim)
    direction = None
    center = None
    if base is None:
        base_shape = pair_shape(S, optimal_p(S))
    elif isinstance(base, PairWeights):
        base_shape = pair_shape(S, base)
    elif isinstance(base, Ellipsoid):
        base_shape = np.array(base.shape)
        center = base.center
    else:
        arr = np.asarray(base, dtype=float)
        if arr.ndim == 1:
            direction = as_directions(arr, S.dim)
            base_shape = tangent_shape(S, direction)
        else:
            base_shape = symmetrize(arr)
            if base_shape.shape != (S.dim, S.dim):
                raise DimensionMismatch("base matrix does not match the sum dimension")
    return _feasibility(S, base_shape, q0, grid, tol, direction, center)


def family_bound(S: EllipsoidSum, p: PairWeights, q0=None, grid=None, tol=1e-9) -> Ellipsoid:
    """Outer bound ``E(Q0 + Q_u)`` centered at the sum of the centers.

    Positive definiteness is checked exactly and support dominance on
    ``grid``; either failure raises :class:`InfeasibleRegularizer` carrying
    the :class:`FeasibilityReport`.
    """
    grid = _grid_for(S, grid)
    q0 = _as_q0(q0, S.dim)
    Qu = pair_shape(S, p)
    report = _feasibility(S, Qu, q0, grid, tol)
    if not report.feasible:
        raise InfeasibleRegularizer(
            f"regularizer rejected (pd_ok={report.pd_ok}, min_margin={report.min_margin:.3e})",
            report,
        )
    return make_ellipsoid(q0 + Qu, S.center)


def tangent_bound(S: EllipsoidSum, ell, q0=None, grid=None, tol=1e-9) -> TangentBound:
    """Bound ``E(Q0 + Q_ell)`` touching the sum at the boundary point for ``ell``."""
    ell = as_directions(ell, S.dim)
    grid = _grid_for(S, grid)
    q0 = _as_q0(q0, S.dim)
    Ql = tangent_shape(S, ell)
    report = _feasibility(S, Ql, q0, grid, tol, direction=ell)
    if report.kernel_ok is False:
        raise KernelViolation("direction is not in the kernel of the regularizer", report)
    if not report.feasible:
        raise InfeasibleRegularizer(
            f"regularizer rejected (pd_ok={report.pd_ok}, min_margin={report.min_margin:.3e})",
            report,
        )
    E = make_ellipsoid(q0 + Ql, S.center)
    return TangentBound(E, boundary_point(S, ell).point, ell.copy())


def min_trace_shape(S: EllipsoidSum):
    """``(sum_i sqrt(tr Q_i)) (sum_i Q_i / sqrt(tr Q_i))``."""
    if S.k == 1:
        return np.array(S.shapes[0])
    s = np.sqrt(S.traces)
    return s.sum() * np.einsum("k,kab->ab", 1.0 / s, S.shapes)


def min_trace_bound(S: EllipsoidSum) -> Ellipsoid:
    """Smallest-trace member of the pair-weighted family with ``Q0 = 0``.

    Its trace equals ``(sum_i sqrt(tr Q_i))**2``.
    """
    if S.k == 1:
        return S.terms[0]
    return make_ellipsoid(min_trace_shape(S), S.center)


def refine_q0(S: EllipsoidSum, base: Ellipsoid, grid=None, options=None) -> RegularizerMatrix:
    """Search a regularizer ``Q0`` that lowers ``tr(base + Q0)`` while the
    bound stays outside the sum on ``grid``.

    The support condition ``sqrt(ell^T (B + Q0) ell) >= h(ell)`` is
    equivalent to ``ell^T Q0 ell >= h(ell)^2 - ell^T B ell``, which is linear
    in the entries of ``Q0``, as is the objective ``tr(Q0)``.  The search is
    therefore a linear program over the ``n(n+1)/2`` free entries with one
    constraint per grid direction.  The LP solution is then scaled back
    (``t * Q0``, ``t <= 1``) until the exact grid and definiteness checks
    pass; ``t * Q0`` stays feasible for every ``t`` in ``[0, 1]`` because the
    constraints are linear and ``Q0 = 0`` is feasible.

    Returns ``Q0 = 0`` when no reduction beyond ``options.min_improvement``
    is available.  The certificate's ``trace_reduction`` is ``-tr(Q0)``.
    """
    options = options or RefineOptions()
    grid = _grid_for(S, grid)
    if base.dim != S.dim:
        raise DimensionMismatch("base dimension does not match the sum")
    B = np.array(base.shape)
    n = S.dim
    base_report = check_containment(base, S, grid, options.tol)
    if not base_report.contained:
        raise InfeasibleBase(f"base bound fails containment (min margin {base_report.min_margin:.3e})")

    d = grid.directions
    # the bound is compared with the sum about the bound's own center
    h = sum_support(S, d) - d @ base.center
    quad_b = np.einsum("ma,ab,mb->m", d, B, d)
    idx = [(a, b) for a in range(n) for b in range(a, n)]
    cols = [d[:, a] * d[:, b] * (1.0 if a == b else 2.0) for a, b in idx]
    G = np.column_stack(cols)
    rhs = (1.0 + options.slack) * np.clip(h, 0.0, None) ** 2 - quad_b
    cost = np.array([1.0 if a == b else 0.0 for a, b in idx])
    box = float(np.trace(B))
    res = linprog(
        cost,
        A_ub=np.vstack([-G, cost[None, :]]),
        b_ub=np.concatenate([-rhs, [0.0]]),
        bounds=[(-box, box)] * len(idx),
        method="highs",
    )

    zero = np.zeros((n, n))
    if res.status != 0:
        report = _feasibility(S, B, zero, grid, options.tol, center=base.center)
        return RegularizerMatrix(zero, _with_reduction(report, 0.0))

    Q0 = np.zeros((n, n))
    for (a, b), v in zip(idx, res.x):
        Q0[a, b] = Q0[b, a] = v

    # largest t in [0, 1] with quad_b + t * quad_q0 >= h^2 on the grid
    quad_q = G @ res.x
    gap = quad_b - np.clip(h, 0.0, None) ** 2
    shrink = quad_q < 0
    t = 1.0
    if np.any(shrink):
        t = float(min(1.0, np.min(np.clip(gap[shrink], 0.0, None) / -quad_q[shrink])))
    Q0 = t * Q0
    for _ in range(60):
        report = _feasibility(S, B, Q0, grid, options.tol, center=base.center)
        if report.feasible:
            break
        Q0 = 0.5 * Q0
    else:
        Q0 = zero
        report = _feasibility(S, B, Q0, grid, options.tol, center=base.center)

    reduction = -float(np.trace(Q0))
    if reduction <= options.min_improvement * max(box, 1.0):
        Q0 = zero
        report = _feasibility(S, B, Q0, grid, options.tol, center=base.center)
        reduction = 0.0
    return RegularizerMatrix(Q0, _with_reduction(report, reduction))


def _with_reduction(report, reduction):
    return FeasibilityReport(
        pd_ok=report.pd_ok,
        support_ok=report.support_ok,
        min_margin=report.min_margin,
        grid=report.grid,
        kernel_ok=report.kernel_ok,
        witness=report.witness,
        trace_reduction=reduction,
    )


def bound_report(E: Ellipsoid, q0=None, feasibility: FeasibilityReport | None = None, **extra) -> dict:
    """JSON-ready record ``{"shape", "center", "trace", "q0", "feasibility", ...}``."""
    n = E.dim
    q0 = np.zeros((n, n)) if q0 is None else np.asarray(q0, dtype=float)
    out = {
        "shape": E.shape.tolist(),
        "center": E.center.tolist(),
        "trace": E.trace,
        "q0": q0.tolist(),
    }
    if feasibility is not None:
        out["feasibility"] = feasibility.to_dict()
    for key, value in extra.items():
        out[key] = value.tolist() if isinstance(value, np.ndarray) else value
    return out


__all__ = [
    "FeasibilityReport",
    "IncompleteWeights",
    "InfeasibleBase",
    "InfeasibleRegularizer",
    "KernelViolation",
    "PairWeights",
    "RefineOptions",
    "RegularizerMatrix",
    "TangentBound",
    "bound_report",
    "clamp_weights",
    "family_bound",
    "min_trace_bound",
    "min_trace_shape",
    "optimal_p",
    "pair_shape",
    "pairs",
    "refine_q0",
    "tangent_bound",
    "tangent_shape",
    "tangent_weights",
    "verify_regularizer",
]
