"""Numerical laboratory for homogeneous (unimodular) Ricci flow.

Lie algebras enter as structure-constant tensors; invariant metrics are SPD
operators against a fixed background; curvature, flows, stability and the
deformation toolkit all reduce to dense linear algebra on those tensors.
"""

from .liealg import (
    LieAlgebra,
    SemidirectData,
    abelian,
    bracket,
    derivations,
    is_nilpotent,
    is_unimodular,
    jacobi_residual,
    killing_form,
    semidirect,
    unimodularity_defect,
)
from .homspace import (
    ReductiveSplit,
    StabilityError,
    StabilityFailure,
    Weight,
    WeightDecomposition,
    ad_h_equivariance_residual,
    check_theta_adapted,
    plain_split,
    split_u,
    weight_split,
)
from .curvature import (
    CurvatureReport,
    InvariantMetric,
    mean_curvature,
    ricci,
    ricci_U_block,
    ricci_V_block,
    scalar_curvatures,
    scalar_star_terms,
    tensor_norm,
    unimodular_ricci,
)
from .flow import (
    FlowControls,
    FlowTrajectory,
    blowdown,
    extinction_analysis,
    integrate,
    verify_monotonicity,
    verify_scalar_evolution,
)
from .stability import (
    RepMetricState,
    is_stable,
    moment_map_flow,
    normality_residual,
)
from .deform import (
    NilsolitonFit,
    SubmersionSplit,
    nilsoliton_fit,
    retract_horizontal,
    submersion_split,
    transpose_derivation_residual,
)
from .catalog import (
    CATALOG_NAMES,
    CatalogEntry,
    catalog,
    heisenberg,
    metric_from_spec,
    random_adapted_metric,
    random_metric,
    su2,
)

__version__ = "0.1.0"
