"""Exact boundaries and outer ellipsoidal bounds of Minkowski sums of
ellipsoids, with reachable sets of discrete-time linear systems."""

from .bounds import (
    FeasibilityReport,
    IncompleteWeights,
    InfeasibleBase,
    InfeasibleRegularizer,
    KernelViolation,
    PairWeights,
    RefineOptions,
    RegularizerMatrix,
    TangentBound,
    family_bound,
    min_trace_bound,
    optimal_p,
    refine_q0,
    tangent_bound,
    tangent_weights,
    verify_regularizer,
)
from .core import (
    DimensionMismatch,
    Ellipsoid,
    NonSymmetric,
    NotPositiveDefinite,
    NotUnitVector,
    RankDeficient,
    affine_image,
    contains_point,
    ellipsoid_from_dict,
    ellipsoid_to_dict,
    make_ellipsoid,
    support,
    support_point,
    unit_vector,
)
from .minkowski import (
    BoundarySample,
    ContainmentReport,
    DirectionGrid,
    EllipsoidSum,
    boundary_point,
    check_containment,
    ellipsoid_sum,
    make_direction_grid,
    sample_boundary,
    sum_support,
)
from .reachset import (
    AllDegenerate,
    BadAxes,
    BoundednessReport,
    LtvSystem,
    NotSettled,
    ReachSpec,
    boundedness_check,
    input_shape_matrices,
    lti_system,
    ltv_system,
    project_to_plane,
    reach_boundary,
    reach_min_trace,
    reach_sum,
    settling_horizon,
    system_from_dict,
    transition_products,
)

__version__ = "0.1.0"
