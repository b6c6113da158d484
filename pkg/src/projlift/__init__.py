"""projlift: a numerical laboratory for random matrix products on
projective spaces with a distinguished invariant subspace.

Estimates Lyapunov and growth-filtration exponents, simulates the fibered
(theta, t) system on the complement of an invariant projective subspace,
classifies contraction/expansion regimes for stationary lifts, and runs
affine-Grassmannian experiments at desk scale.
"""

__version__ = "0.1.0"

from .bundle import (
    BundleState,
    ChartError,
    cocycle_step,
    drift_step_bound_check,
    drift_value,
    fiber_contraction_rate,
    join_state,
    split_point,
)
from .ensembles import (
    BlockSystem,
    EnsembleError,
    MatrixEnsemble,
    build_affine_embedding,
    build_sl2c_ensemble,
    dirac,
    finite_ensemble,
    first_moment,
    load_ensemble,
    quotient_ensemble,
    restrict_to_invariant,
    save_ensemble,
    transpose_ensemble,
    wedge_ensemble,
)
from .estimates import GrowthEstimate, combined_stderr
from .fkh import (
    FkhReport,
    find_invariant_subspace,
    fkh_estimate,
    transpose_dual_space,
)
from .homogeneous import (
    HomogeneousSpace,
    SemidirectEnsemble,
    build_sl2c_semidirect,
    grassmannian_experiment,
    levi_spectrum_check,
    lift_group_element,
    psi_embed,
)
from .linalg import (
    LinAlgError,
    Subspace,
    gauge_N,
    principal_angle_distance,
    proj_distance,
    proj_normalize,
    rank_span,
    wedge_power,
)
from .lyapunov import (
    product_trajectory,
    spectrum,
    subspace_exponents,
    top_exponent,
    uniform_growth_floor,
    vector_growth,
)
from .measures import (
    EmpiricalMeasure,
    LiftClassification,
    birkhoff_empirical,
    cesaro_empirical,
    classify_regime,
    cocycle_average,
    discrepancy,
    push_forward,
    tightness_diagnostic,
    uniqueness_probe,
)
