"""Command-line front end.

Exit codes: 0 ok, 1 parse/validation error, 2 infeasible, 3 I/O error.
On failure a JSON object ``{"error", "exit_code", "message"}`` is written
to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bounds, core, minkowski, reachset, svg

COMMANDS = (
    "sum-boundary",
    "bound-tangent",
    "bound-min-trace",
    "bound-refine-q0",
    "check",
    "reach",
    "reach-bound",
    "settle",
)
EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, kind, code, message):
        super().__init__(message)
        self.kind = kind
        self.code = code


def build_parser():
    parser = argparse.ArgumentParser(prog="ellipsum", description="Ellipsoidal calculus toolkit")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--in", dest="input_path", required=True, metavar="PATH")
    parser.add_argument("--out", dest="output_path", default="-", metavar="PATH")
    parser.add_argument("--grid", type=int, default=None, metavar="N")
    parser.add_argument("--seed", type=int, default=0, metavar="N")
    parser.add_argument("--tol", type=float, default=None, metavar="X")
    parser.add_argument("--ell", type=float, nargs="+", default=None, metavar="v")
    parser.add_argument("--axes", type=int, nargs=2, default=None, metavar=("a", "b"))
    parser.add_argument("--format", choices=("json", "csv", "svg"), default=None)
    parser.add_argument("--steps", type=int, default=None, metavar="K")
    return parser


def _read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError("IoError", EXIT_IO, f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError("ParseError", EXIT_VALIDATION, f"invalid JSON: {exc}") from exc


def _ellipsoid_set(doc):
    records = doc.get("ellipsoids") if isinstance(doc, dict) else doc
    if not isinstance(records, list) or not records:
        raise core.RecordError("input needs a non-empty list of ellipsoids")
    return minkowski.EllipsoidSum(tuple(core.ellipsoid_from_dict(r) for r in records))


def _grid(args, n):
    count = args.grid if args.grid is not None else minkowski.default_grid_count(n)
    return minkowski.make_direction_grid(n, count, args.seed)


def _json_text(obj):
    return json.dumps(obj, indent=2) + "\n"


def _write(path, text):
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CliError("IoError", EXIT_IO, f"cannot write {path}: {exc}") from exc


def _planar(S, bound_list, axes):
    """Project a sum and bounds to 2-D for plotting."""
    if S.dim == 2 and axes is None:
        return S, bound_list
    if axes is None:
        raise core.DimensionMismatch("plots of sums above two dimensions need --axes")
    return (
        reachset.project_to_plane(S, axes),
        [(label, reachset.project_to_plane(E, axes)) for label, E in bound_list],
    )


def _figure(S, bound_list, axes, title):
    S2, b2 = _planar(S, bound_list, axes)
    grid = minkowski.make_direction_grid(2, 720)
    exact = minkowski.boundary_points(S2, grid.directions)
    curves = [svg.Curve("exact boundary", exact, color=svg.PALETTE[0])]
    for i, (label, E) in enumerate(b2):
        curves.append(svg.ellipse_curve(E, label, color=svg.PALETTE[1 + i % (len(svg.PALETTE) - 1)]))
    return svg.render_svg(curves, title=title)


def _standard_tangents(S):
    out = []
    for a in range(S.dim):
        e = np.zeros(S.dim)
        e[a] = 1.0
        tb = bounds.tangent_bound(S, e)
        out.append((f"tangent l{a + 1}", tb.ellipsoid))
    return out


def cmd_sum_boundary(args, doc):
    S = _ellipsoid_set(doc)
    fmt = args.format or "csv"
    if fmt == "svg":
        return _figure(S, [], args.axes, "exact boundary of the geometric sum")
    samples = minkowski.sample_boundary(S, _grid(args, S.dim))
    if fmt == "csv":
        return minkowski.boundary_csv(samples)
    return _json_text(
        {
            "directions": [s.direction.tolist() for s in samples],
            "points": [s.point.tolist() for s in samples],
            "support": [s.support for s in samples],
        }
    )


def cmd_bound_tangent(args, doc):
    S = _ellipsoid_set(doc)
    if args.ell is None:
        raise ValueError("bound-tangent requires --ell")
    if len(args.ell) != S.dim:
        raise core.DimensionMismatch(f"--ell has {len(args.ell)} components, expected {S.dim}")
    ell = core.unit_vector(args.ell)
    grid = _grid(args, S.dim)
    tb = bounds.tangent_bound(S, ell, grid=grid)
    if args.format == "svg":
        return _figure(S, [("tangent bound", tb.ellipsoid)], args.axes, "tangent outer bound")
    report = bounds.verify_regularizer(S, None, ell, grid)
    return _json_text(
        bounds.bound_report(tb.ellipsoid, None, report, tangency_point=tb.tangency_point, direction=tb.direction)
    )


def cmd_bound_min_trace(args, doc):
    S = _ellipsoid_set(doc)
    E = bounds.min_trace_bound(S)
    if args.format == "svg":
        return _figure(S, _standard_tangents(S) + [("minimum trace", E)], args.axes,
                       "exact boundary and outer ellipsoidal bounds")
    grid = _grid(args, S.dim)
    report = bounds.verify_regularizer(S, None, E, grid)
    return _json_text(bounds.bound_report(E, None, report))


def cmd_bound_refine_q0(args, doc):
    S = _ellipsoid_set(doc)
    base = bounds.min_trace_bound(S)
    grid = _grid(args, S.dim)
    options = bounds.RefineOptions(tol=args.tol) if args.tol is not None else None
    reg = bounds.refine_q0(S, base, grid, options)
    E = core.make_ellipsoid(base.shape + reg.matrix, base.center)
    if args.format == "svg":
        return _figure(S, [("minimum trace", base), ("minimum trace + Q0", E)], args.axes,
                       "regularized minimum-trace bound")
    return _json_text(bounds.bound_report(E, reg.matrix, reg.certificate, base_trace=base.trace))


def cmd_check(args, doc):
    S = _ellipsoid_set(doc)
    if not isinstance(doc, dict) or "bound" not in doc:
        raise core.RecordError("check input needs a 'bound' ellipsoid")
    bound = core.ellipsoid_from_dict(doc["bound"])
    tol = args.tol if args.tol is not None else 1e-9
    rep = minkowski.check_containment(bound, S, _grid(args, S.dim), tol)
    text = _json_text(
        {
            "verdict": rep.verdict,
            "contained": rep.contained,
            "min_margin": rep.min_margin,
            "witness": rep.witness.tolist(),
            "grid_count": rep.grid.count,
            "margins": rep.margins.tolist(),
        }
    )
    return text, (EXIT_OK if rep.contained else EXIT_INFEASIBLE)


def _reach_spec(args, doc):
    system = reachset.system_from_dict(doc)
    steps = args.steps if args.steps is not None else system.horizon
    if steps < 1:
        raise ValueError("--steps must be at least 1")
    return reachset.ReachSpec(system, steps + 1)


def _reach_svgs(args, S, bound_list, title):
    n = S.dim
    if n == 2 or args.axes is not None:
        return [(args.output_path, _figure(S, bound_list, args.axes, title))]
    if args.output_path == "-":
        raise ValueError("projection figures need --out for the file stem")
    out = Path(args.output_path)
    files = []
    for a in range(n):
        for b in range(a + 1, n):
            path = out.with_name(f"{out.stem}_x{a + 1}x{b + 1}{out.suffix or '.svg'}")
            files.append((str(path), _figure(S, bound_list, (a, b), f"{title} (x{a + 1}, x{b + 1})")))
    return files


def cmd_reach(args, doc):
    spec = _reach_spec(args, doc)
    S = reachset.reach_sum(spec)
    fmt = args.format or "csv"
    if fmt == "svg":
        bound_list = _standard_tangents(S) + [("minimum trace", bounds.min_trace_bound(S))]
        return _reach_svgs(args, S, bound_list, "reachable set")
    samples = minkowski.sample_boundary(S, _grid(args, S.dim))
    if fmt == "csv":
        return minkowski.boundary_csv(samples)
    return _json_text(
        {
            "k": spec.k,
            "term_count": S.k,
            "directions": [s.direction.tolist() for s in samples],
            "points": [s.point.tolist() for s in samples],
            "support": [s.support for s in samples],
        }
    )


def cmd_reach_bound(args, doc):
    spec = _reach_spec(args, doc)
    S = reachset.reach_sum(spec)
    E = bounds.min_trace_bound(S)
    if args.format == "svg":
        return _reach_svgs(args, S, [("minimum trace", E)], "reachable set bound")
    report = bounds.verify_regularizer(S, None, E, _grid(args, S.dim))
    return _json_text(bounds.bound_report(E, None, report, k=spec.k, term_count=S.k))


def cmd_settle(args, doc):
    system = reachset.system_from_dict(doc)
    tol = args.tol if args.tol is not None else 1e-6
    k_max = args.steps if args.steps is not None else 10_000
    k_star = reachset.settling_horizon(system, tol, k_max)
    rho = max(reachset.spectral_radius(A) for A in system.A[:1])
    return _json_text({"k_star": k_star, "tol": tol, "spectral_radius": rho,
                       "definition": reachset.SETTLING_DEFINITION})


HANDLERS = {
    "sum-boundary": cmd_sum_boundary,
    "bound-tangent": cmd_bound_tangent,
    "bound-min-trace": cmd_bound_min_trace,
    "bound-refine-q0": cmd_bound_refine_q0,
    "check": cmd_check,
    "reach": cmd_reach,
    "reach-bound": cmd_reach_bound,
    "settle": cmd_settle,
}


def _validate(args):
    if args.grid is not None and args.grid < 4:
        raise ValueError("--grid must be at least 4")
    if args.tol is not None and not args.tol > 0:
        raise ValueError("--tol must be positive")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return EXIT_OK
        _emit_error("ValidationError", EXIT_VALIDATION, "invalid command line")
        return EXIT_VALIDATION
    try:
        _validate(args)
        doc = _read_json(args.input_path)
        result = HANDLERS[args.command](args, doc)
        code = EXIT_OK
        if isinstance(result, tuple):
            result, code = result
        if isinstance(result, list):
            for path, text in result:
                _write(path, text)
        else:
            _write(args.output_path, result)
        return code
    except CliError as exc:
        _emit_error(exc.kind, exc.code, str(exc))
        return exc.code
    except (bounds.InfeasibleRegularizer, bounds.InfeasibleBase, reachset.NotSettled) as exc:
        _emit_error(type(exc).__name__, EXIT_INFEASIBLE, str(exc))
        return EXIT_INFEASIBLE
    except core.RecordError as exc:
        _emit_error("ParseError", EXIT_VALIDATION, str(exc))
        return EXIT_VALIDATION
    except (ValueError, TypeError) as exc:
        _emit_error("ValidationError", EXIT_VALIDATION, f"{type(exc).__name__}: {exc}")
        return EXIT_VALIDATION
    except OSError as exc:
        _emit_error("IoError", EXIT_IO, str(exc))
        return EXIT_IO


def _emit_error(kind, code, message):
    sys.stderr.write(json.dumps({"error": kind, "exit_code": code, "message": message}) + "\n")


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
