"""Safe mean-field control of stochastic multi-agent populations on the
periodic square, built around kernel-overlap barrier functionals and
closed-form quadratic-program safety filters."""

from .analysis import (
    EnsembleStats,
    GridField,
    StabilityReport,
    chi_squared_uniform,
    control_field,
    divergence,
    ensemble_stats,
    grid_eval,
    kde_density,
    l2_error,
    l2_norm,
    laplacian,
    stability_constants,
    uniform_density,
)
from .config import (
    ExperimentConfig,
    dump_config,
    load_config,
    load_preset,
    parse_config,
    save_config,
)
from .errors import (
    CertificateUnavailableError,
    InfeasibleConstraintError,
    InvalidInputError,
    PlacementInfeasibleError,
    SetupError,
    SwarmSafeError,
)
from .obstacles import (
    BarrierSpec,
    ObstaclePotential,
    ObstacleSet,
    barrier_value,
    build_potential,
    certified_threshold,
    fraction_inside,
    kernel_overlap,
    min_overlap_bound,
    potential_eval,
)
from .qpfilter import (
    FilterReport,
    LinearConstraint,
    assemble_direct_constraint,
    assemble_follower_constraint,
    barrier_rate_estimate,
    micro_cbf_filter,
    project_halfspace,
    project_polytope,
)
from .scenarios import (
    CoverageScenario,
    ObstacleRules,
    ShepherdParams,
    ShepherdingScenario,
    VonMisesTarget,
    coverage_nominal_control,
    follower_drift,
    place_obstacles,
    shepherd_nominal_control,
    von_mises_density,
)
from .sim import RunRecord, SimConfig, Snapshot, euler_maruyama_step, run_simulation
from .torus import (
    GaussKernelSpec,
    RepulsionSpec,
    gauss_kernel,
    repulsion,
    wrap,
    wrapped_displacement,
    wrapped_distance,
)

__version__ = "0.1.0"
