"""Reachable sets of discrete-time linear time-varying systems.

The system is ``s_{k+1} = A_k s_k + sum_i B_{i,k} u_{i,k}`` with inputs
``u_{i,k}`` in ``E(R_{i,k})`` and initial state ``s_1 = 0``.  Steps are
numbered from 1 as in the recursion; ``system.A[j - 1]`` is ``A_j``.

The states reachable at step ``k`` form the geometric sum of the input
ellipsoids pushed forward to step ``k``::

    Sigma_{i,j} = D_j B_{i,j} R_{i,j} B_{i,j}^T D_j^T,   D_j = A_{k-1} ... A_{j+1}

for ``j = 1 .. k-1``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import eigs

from .bounds import min_trace_bound
from .core import (
    DimensionMismatch,
    Ellipsoid,
    RecordError,
    cholesky_factor,
    ellipsoid_from_factor,
    symmetrize,
)
from .minkowski import EllipsoidSum, sample_boundary

SETTLING_DEFINITION = (
    "k* is the smallest target step k for which the trace root of the next "
    "input term, sum_i sqrt(tr(A^(k-1) B_i R_i B_i^T A^(k-1)^T)), falls below "
    "tol times the trace root of the minimum-trace bound at step k"
)
DENSE_EIG_MAX_DIM = 64


class AllDegenerate(ValueError):
    pass


class NotSettled(RuntimeError):
    pass


class BadAxes(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class InputChannel:
    """Per-step input matrices ``B[j-1]`` (n x m) and input shapes ``R[j-1]``."""

    B: tuple
    R: tuple

    @property
    def input_dim(self) -> int:
        return self.B[0].shape[1]


@dataclass(frozen=True, eq=False)
class LtvSystem:
    A: tuple
    inputs: tuple
    lti: bool = False

    def __post_init__(self):
        if not self.A:
            raise ValueError("horizon must be at least 1")
        n = self.A[0].shape[0]
        K = len(self.A)
        for A in self.A:
            if A.shape != (n, n):
                raise DimensionMismatch(f"dynamics matrix has shape {A.shape}, expected ({n}, {n})")
        if not self.inputs:
            raise ValueError("at least one input channel is required")
        for ch in self.inputs:
            if len(ch.B) != K or len(ch.R) != K:
                raise DimensionMismatch("input matrices must cover every step of the horizon")
            m = ch.B[0].shape[1]
            for B, R in zip(ch.B, ch.R):
                if B.ndim != 2 or B.shape != (n, m):
                    raise DimensionMismatch(f"input matrix has shape {B.shape}, expected ({n}, {m})")
                if R.shape != (m, m):
                    raise DimensionMismatch(f"input shape has shape {R.shape}, expected ({m}, {m})")

    @property
    def state_dim(self) -> int:
        return self.A[0].shape[0]

    @property
    def horizon(self) -> int:
        return len(self.A)

    @property
    def r(self) -> int:
        return len(self.inputs)


def _mat(x):
    a = np.atleast_2d(np.asarray(x, dtype=float))
    a.setflags(write=False)
    return a


def _validated_shape(R):
    R = symmetrize(R)
    cholesky_factor(R)
    R.setflags(write=False)
    return R


def lti_system(A, inputs, horizon) -> LtvSystem:
    """Time-invariant system; ``inputs`` is a sequence of ``(B, R)`` pairs."""
    A = _mat(A)
    chans = []
    for B, R in inputs:
        B, R = _mat(B), _validated_shape(_mat(R))
        chans.append(InputChannel((B,) * horizon, (R,) * horizon))
    return LtvSystem((A,) * int(horizon), tuple(chans), lti=True)


def ltv_system(A_seq, inputs) -> LtvSystem:
    """Time-varying system; ``inputs`` is a sequence of ``(B_seq, R_seq)``."""
    A = tuple(_mat(a) for a in A_seq)
    chans = []
    for B_seq, R_seq in inputs:
        chans.append(
            InputChannel(tuple(_mat(b) for b in B_seq), tuple(_validated_shape(_mat(r)) for r in R_seq))
        )
    return LtvSystem(A, tuple(chans), lti=False)


def _array(value, name):
    try:
        arr = np.array(value, dtype=float)
    except (ValueError, TypeError) as exc:
        raise RecordError(f"{name} is ragged or non-numeric") from exc
    if not np.all(np.isfinite(arr)):
        raise RecordError(f"{name} has non-finite entries")
    return arr


def system_from_dict(record) -> LtvSystem:
    """Parse ``{"A": ..., "inputs": [{"B": ..., "R": ...}], "horizon": K}``.

    A 2-D matrix is broadcast over the horizon; a list of matrices gives
    one matrix per step and must have length ``horizon``.
    """
    if not isinstance(record, dict):
        raise RecordError("system record must be an object")
    for key in ("A", "inputs"):
        if key not in record:
            raise RecordError(f"system record is missing '{key}'")
    A = _array(record["A"], "A")
    if A.ndim == 3:
        horizon = int(record.get("horizon", A.shape[0]))
    else:
        if "horizon" not in record:
            raise RecordError("system record is missing 'horizon'")
        horizon = record["horizon"]
    if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 1:
        raise ValueError("horizon must be a positive integer")
    if not isinstance(record["inputs"], list) or not record["inputs"]:
        raise RecordError("inputs must be a non-empty list")

    def steps(arr, name):
        if arr.ndim <= 2:
            return [np.atleast_2d(arr)] * horizon
        if arr.ndim == 3 and arr.shape[0] == horizon:
            return list(arr)
        raise DimensionMismatch(f"{name} must be a matrix or a list of {horizon} matrices")

    A_seq = steps(A, "A")
    inputs = []
    for idx, ch in enumerate(record["inputs"]):
        if not isinstance(ch, dict) or "B" not in ch or "R" not in ch:
            raise RecordError(f"input {idx} needs 'B' and 'R'")
        B = _array(ch["B"], f"inputs[{idx}].B")
        if B.ndim == 1:
            B = B[:, None]
        inputs.append((steps(B, "B"), steps(_array(ch["R"], f"inputs[{idx}].R"), "R")))
    lti = A.ndim <= 2 and all(np.asarray(ch["B"]).ndim <= 2 and np.asarray(ch["R"]).ndim <= 2 for ch in record["inputs"])
    system = ltv_system(A_seq, inputs)
    return LtvSystem(system.A, system.inputs, lti=lti)


@dataclass(frozen=True, eq=False)
class ReachSpec:
    system: LtvSystem
    k: int

    def __post_init__(self):
        if not 2 <= self.k <= self.system.horizon + 1:
            raise ValueError(f"target step must lie in [2, {self.system.horizon + 1}], got {self.k}")


@dataclass(frozen=True, eq=False)
class InputShapeTable:
    """``Sigma_{i,j}`` for channel ``i`` (0-based) and step ``j`` (stored at ``j - 1``).

    ``ellipsoids[i][j-1]`` is ``None`` for degenerate (flat) entries, which
    are excluded from sums.
    """

    shapes: np.ndarray
    ellipsoids: tuple
    degenerate: np.ndarray
    warnings: tuple

    def terms(self):
        return [e for row in self.ellipsoids for e in row if e is not None]


def transition_products(spec: ReachSpec) -> list:
    """``[D_1, ..., D_{k-1}]`` with ``D_j = A_{k-1} ... A_{j+1}`` and ``D_{k-1} = I``."""
    A, k = spec.system.A, spec.k
    n = spec.system.state_dim
    D = [None] * (k - 1)
    D[k - 2] = np.eye(n)
    for j in range(k - 2, 0, -1):
        D[j - 1] = D[j] @ A[j]  # D_j = D_{j+1} A_{j+1}
    return D


def _full_rank(M):
    return np.linalg.matrix_rank(M) == M.shape[0]


def input_shape_matrices(spec: ReachSpec) -> InputShapeTable:
    """Push every input ellipsoid forward to step ``k``.

    Each entry is the affine image of ``E(R_{i,j})`` under ``D_j B_{i,j}``,
    carried as a factor so that numerically near-singular images of stable
    dynamics keep their exact (positive definite) meaning.  An entry is
    degenerate when ``B_{i,j} R^{1/2}`` or one of the dynamics matrices in
    ``D_j`` is rank deficient.
    """
    system, k = spec.system, spec.k
    n = system.state_dim
    D = transition_products(spec)
    # chain_ok[j-1]: A_{j+1} .. A_{k-1} all have full rank
    chain_ok = [True] * (k - 1)
    for j in range(k - 2, 0, -1):
        chain_ok[j - 1] = chain_ok[j] and _full_rank(system.A[j])
    shapes = np.zeros((system.r, k - 1, n, n))
    degenerate = np.zeros((system.r, k - 1), dtype=bool)
    table, notes = [], []
    for i, ch in enumerate(system.inputs):
        row = []
        for j in range(1, k):
            B, R = ch.B[j - 1], ch.R[j - 1]
            BL = B @ np.linalg.cholesky(R)
            G = D[j - 1] @ BL
            ok = chain_ok[j - 1] and BL.shape[1] >= n and _full_rank(BL) and np.any(G)
            if ok:
                E = ellipsoid_from_factor(G)
                shapes[i, j - 1] = E.shape
                row.append(E)
            else:
                shapes[i, j - 1] = G @ G.T
                degenerate[i, j - 1] = True
                notes.append(f"Sigma[{i + 1},{j}] is degenerate (flat image) and was excluded")
                row.append(None)
        table.append(tuple(row))
    if notes:
        warnings.warn(f"{len(notes)} degenerate input term(s) excluded from the reachable set", stacklevel=2)
    return InputShapeTable(shapes, tuple(table), degenerate, tuple(notes))


def reach_sum(spec: ReachSpec) -> EllipsoidSum:
    """The reachable set at step ``k`` as a sum over non-degenerate terms."""
    terms = input_shape_matrices(spec).terms()
    if not terms:
        raise AllDegenerate("every input term is degenerate; the reachable set is flat")
    return EllipsoidSum(tuple(terms))


def reach_min_trace(spec: ReachSpec) -> Ellipsoid:
    return min_trace_bound(reach_sum(spec))


def reach_boundary(spec: ReachSpec, grid) -> list:
    return sample_boundary(reach_sum(spec), grid)


def project_to_plane(obj, axes):
    """Shadow of an ellipsoid, a sum, or a point stack on coordinates ``axes``.

    The shadow of ``E(Q, c)`` on coordinates ``(a, b)`` is the ellipsoid
    with the principal 2x2 submatrix of ``Q``; the shadow of a sum is the
    sum of the shadows.
    """
    a, b = axes
    if isinstance(obj, EllipsoidSum):
        n = obj.dim
    elif isinstance(obj, Ellipsoid):
        n = obj.dim
    else:
        obj = np.atleast_2d(np.asarray(obj, dtype=float))
        n = obj.shape[1]
    if a == b or not (0 <= a < n and 0 <= b < n) or int(a) != a or int(b) != b:
        raise BadAxes(f"axes {axes} must be two distinct indices in [0, {n})")
    sel = [int(a), int(b)]
    if isinstance(obj, EllipsoidSum):
        return EllipsoidSum(tuple(project_to_plane(t, axes) for t in obj.terms))
    if isinstance(obj, Ellipsoid):
        return ellipsoid_from_factor(obj.factor[sel, :], obj.center[sel])
    return obj[:, sel]


def spectral_radius(A) -> float:
    """Largest eigenvalue magnitude (dense solve up to 64 states, Arnoldi above)."""
    A = np.asarray(A, dtype=float)
    if A.shape[0] <= DENSE_EIG_MAX_DIM:
        return float(np.max(np.abs(np.linalg.eigvals(A))))
    vals = eigs(A, k=1, which="LM", return_eigenvectors=False, v0=np.ones(A.shape[0]))
    return float(np.abs(vals[0]))


@dataclass(frozen=True, eq=False)
class BoundednessReport:
    """Trace roots ``S_kappa`` of the bound built from the ``kappa`` newest steps.

    ``trace_roots[kappa - 1]`` is ``S_kappa`` for ``kappa = 1 .. k-1`` and
    ``increments[kappa - 1] = S_{kappa+1} - S_kappa``.  Convergence uses the
    increment relative to the running trace root, so it does not depend on
    the scale of the inputs.
    """

    trace_roots: np.ndarray
    increments: np.ndarray
    ratio_estimates: np.ndarray
    relative_increments: np.ndarray
    spectral_radius_max: float
    converged: bool
    settling_step: int | None
    tol: float

    def to_dict(self) -> dict:
        return {
            "trace_roots": self.trace_roots.tolist(),
            "increments": self.increments.tolist(),
            "ratio_estimates": [None if np.isnan(v) else float(v) for v in self.ratio_estimates],
            "relative_increments": self.relative_increments.tolist(),
            "spectral_radius_max": self.spectral_radius_max,
            "converged": self.converged,
            "settling_step": self.settling_step,
            "tol": self.tol,
        }


def _term_trace_roots(spec):
    # per step j (summed over channels); degenerate entries count as zero
    table = input_shape_matrices(spec)
    roots = np.zeros(spec.k - 1)
    for row in table.ellipsoids:
        for j, E in enumerate(row):
            if E is not None:
                roots[j] += np.sqrt(E.trace)
    return roots


def boundedness_check(system: LtvSystem, k: int, tol=1e-6) -> BoundednessReport:
    """Convergence diagnostics of the minimum-trace reach bound at step ``k``.

    ``converged`` requires the last increment to be below ``tol`` relative
    to ``S_{k-1}`` and every dynamics matrix used to have spectral radius
    below one.  ``settling_step`` is the first ``kappa`` from which all
    relative increments stay below ``tol``.
    """
    if k < 3:
        raise ValueError("at least two increments are needed (k >= 3)")
    spec = ReachSpec(system, k)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        roots = _term_trace_roots(spec)
    newest_first = roots[::-1]  # step k-1, k-2, ..., 1
    S = np.cumsum(newest_first)
    delta = np.diff(S)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(delta[:-1] > 0, delta[1:] / delta[:-1], np.nan)
        rel = np.where(S[1:] > 0, delta / S[1:], 0.0)
    rho = max(spectral_radius(A) for A in system.A[: k - 1])
    below = rel < tol
    settling = None
    if below.size and below[-1]:
        first_bad = np.flatnonzero(~below)
        settling = int(first_bad[-1] + 2) if first_bad.size else 1
    converged = bool(below.size and below[-1] and rho < 1.0)
    return BoundednessReport(S, delta, ratios, rel, rho, converged, settling, tol)


def settling_horizon(system: LtvSystem, tol=1e-6, k_max=10_000) -> int:
    """Smallest target step ``k`` at which the next input term is negligible.

    See :data:`SETTLING_DEFINITION`.  Raises :class:`NotSettled` when no
    ``k <= k_max`` qualifies.
    """
    if not system.lti:
        raise ValueError("settling horizon is defined for time-invariant systems")
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = system.A[0]
    G = [ch.B[0] @ np.linalg.cholesky(ch.R[0]) for ch in system.inputs]
    total = 0.0
    for k in range(2, k_max + 1):
        # G holds A^(k-2) B_i L_i: the oldest term at target step k
        total += sum(np.linalg.norm(g) for g in G)
        G = [A @ g for g in G]
        nxt = sum(np.linalg.norm(g) for g in G)
        if nxt < tol * total:
            return k
    raise NotSettled(f"no settling within k_max={k_max}")


__all__ = [
    "AllDegenerate",
    "BadAxes",
    "BoundednessReport",
    "InputChannel",
    "InputShapeTable",
    "LtvSystem",
    "NotSettled",
    "ReachSpec",
    "SETTLING_DEFINITION",
    "boundedness_check",
    "input_shape_matrices",
    "lti_system",
    "ltv_system",
    "project_to_plane",
    "reach_boundary",
    "reach_min_trace",
    "reach_sum",
    "settling_horizon",
    "spectral_radius",
    "system_from_dict",
    "transition_products",
]
