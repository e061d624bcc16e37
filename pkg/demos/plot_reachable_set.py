"""
Reachable set of a stable three-state system
============================================

With ``s_{k+1} = F s_k + v_k`` and ``v_k`` in the unit ball, the states
reachable after 120 steps form a sum of 120 ellipsoids ``E(F^i F^iT)``.
We bound it with the minimum-trace ellipsoid, look at how quickly older
inputs stop mattering, and draw the three coordinate-plane shadows.
"""

import sys
from pathlib import Path

import numpy as np

from ellipsum import (
    ReachSpec,
    boundedness_check,
    contains_point,
    lti_system,
    make_direction_grid,
    min_trace_bound,
    project_to_plane,
    reach_boundary,
    reach_sum,
    settling_horizon,
)
from ellipsum.minkowski import boundary_points
from ellipsum.reachset import SETTLING_DEFINITION, spectral_radius
from ellipsum.svg import Curve, ellipse_curve, render_svg

out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(".")

F = np.array([[0.67, 0.35, -0.12], [-0.66, -0.55, 0.41], [2.12, 1.83, 0.47]])
print("spectral radius:", spectral_radius(F))

system = lti_system(F, [(np.eye(3), np.eye(3))], horizon=150)
spec = ReachSpec(system, 121)
S = reach_sum(spec)
E = min_trace_bound(S)
print("terms:", S.k, " bound trace:", E.trace)

# every exact boundary sample sits inside the bound
samples = reach_boundary(spec, make_direction_grid(3))
print("inside:", all(contains_point(E, s.point, tol=1e-8) for s in samples))

# growth of the trace root as more of the input history is included
rep = boundedness_check(system, 151)
print("converged:", rep.converged, " settled from step", rep.settling_step)
print("tail ratio estimates:", rep.ratio_estimates[-60:-55])
print("settling horizon:", settling_horizon(system, 1e-6))
print(SETTLING_DEFINITION)

circle = make_direction_grid(2, 720).directions
for a, b in [(0, 1), (0, 2), (1, 2)]:
    S2 = project_to_plane(S, (a, b))
    doc = render_svg(
        [Curve("exact boundary", boundary_points(S2, circle)),
         ellipse_curve(project_to_plane(E, (a, b)), "minimum trace")],
        title=f"reachable set, (x{a + 1}, x{b + 1}) plane",
    )
    (out_dir / f"reach_x{a + 1}x{b + 1}.svg").write_text(doc)
