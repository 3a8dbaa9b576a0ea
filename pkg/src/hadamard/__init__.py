"""Computing in CAT(0) (Hadamard) spaces.

Space models with closed-form geodesics, the quasilinearization pairing,
a calculus of firmly nonexpansive operators, weighted barycenters,
projection algorithms with Fejer/shadow diagnostics, and a randomized
certifier for the underlying metric inequalities.
"""

from .errors import (
    CheckSpecError,
    ConstructionError,
    ConvergenceFailureError,
    DomainError,
    EdgeListError,
    HadamardError,
    InfeasibleTriangleError,
    InvalidPointError,
    NotAFixedPointError,
    ScenarioError,
    SpaceMismatchError,
)
from .geometry import (
    Euclidean,
    GeodesicSegment,
    Hyperboloid,
    Point,
    ProductSpace,
    SpaceModel,
    ToleranceConfig,
    cat0_defect,
    comparison_triangle,
    distance,
    geodesic,
    geodesic_point,
    minkowski,
    quasilinearization,
)
from .metric_tree import MetricTree, TreeEdge, TreeLocation, parse_edge_list

__version__ = "0.1.0"

from .barycenter import (
    BarycenterConfig,
    WeightedPoints,
    frechet_mean,
    frechet_objective,
    inductive_mean_sweeps,
    variance_defect,
)
from .convex_sets import (
    ConvexSet,
    EuclideanHalfspace,
    EuclideanHyperplane,
    GeodesicBall,
    HyperbolicHalfspace,
    ProductSet,
    Subtree,
    project,
    projection_defect,
)
from .operators import (
    AlphaCertificate,
    Composition,
    Constant,
    ConvexCombination,
    Identity,
    Operator,
    Pointwise,
    Projection,
    alpha_firm_defect,
    apply,
    certify_alpha_firm,
    combination_alpha,
    composition_alpha,
    composition_condition_defect,
    discrepancy,
    fold_composition_alpha,
    lmuv_values,
    phi_profile_defects,
    quasi_firm_defect,
    tau_value,
)
from .iterations import (
    AsymptoticCenterEstimate,
    IterationTrace,
    StopRule,
    approximate_shadows,
    asymptotic_center_estimate,
    attach_shadows,
    averaged_projections,
    cyclic_projections,
    fixed_point_iterate,
    project_to_segment,
    shadow_cauchy_worst_defect,
    shadow_sequence,
    technical_condition_gaps,
)
from .certifier import (
    CertificateReport,
    CheckResult,
    CheckSpec,
    default_suite,
    reevaluate_witness,
    run_check,
    run_suite,
    sample_point,
    space_suite,
)
from .scenario import Scenario, parse_scenario, point_spec, serialize_scenario
from .cli import run_scenario
