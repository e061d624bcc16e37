"""
Exact boundary of a sum of four ellipsoids
==========================================

Four planar ellipsoids are added together.  Their sum is convex but not
an ellipsoid, so we sample its exact boundary one direction at a time and
compare it with three outer ellipsoids: two that touch the boundary along
the coordinate axes and the minimum-trace one.
"""

import sys
from pathlib import Path

import numpy as np

from ellipsum import (
    check_containment,
    ellipsoid_sum,
    make_direction_grid,
    make_ellipsoid,
    min_trace_bound,
    sample_boundary,
    tangent_bound,
)
from ellipsum.svg import Curve, ellipse_curve, render_svg

out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(".")

shapes = [
    [[0.41, 0.33], [0.33, 0.31]],
    [[0.23, 0.11], [0.11, 0.06]],
    [[0.17, -0.1], [-0.1, 0.15]],
    [[0.01, 0.0], [0.0, 0.65]],
]
S = ellipsoid_sum([make_ellipsoid(q) for q in shapes])

# every boundary point comes with its outward direction
grid = make_direction_grid(2, 720)
boundary = np.array([s.point for s in sample_boundary(S, grid)])
print("sum support along x:", boundary[0, 0])

# bounds that touch the sum along e1 and e2
t1 = tangent_bound(S, [1.0, 0.0])
t2 = tangent_bound(S, [0.0, 1.0])
q_star = min_trace_bound(S)

np.set_printoptions(precision=4, suppress=True)
for name, E in [("tangent e1", t1.ellipsoid), ("tangent e2", t2.ellipsoid), ("min trace", q_star)]:
    rep = check_containment(E, S, grid)
    print(f"{name:>10}: trace {E.trace:.4f}  min margin {rep.min_margin:.2e}")
    print(E.shape)

# the minimum-trace bound is not tangent anywhere on this instance
print("gap of the minimum-trace bound:", check_containment(q_star, S, grid).min_margin)

doc = render_svg(
    [
        Curve("exact boundary", boundary),
        ellipse_curve(t1.ellipsoid, "tangent along e1", dashed=True),
        ellipse_curve(t2.ellipsoid, "tangent along e2", dashed=True),
        ellipse_curve(q_star, "minimum trace"),
    ],
    title="sum of four ellipsoids and outer bounds",
)
(out_dir / "four_ellipsoid_sum.svg").write_text(doc)
