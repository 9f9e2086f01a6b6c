"""Set-valued cost-to-travel analysis, storage certificates, and tube MPC on interval boxes."""

from .interval_sets import IntervalBox, boxes_intersect, contains, hausdorff, subset
from .problem import (
    ConfigError,
    GConstraintBlock,
    ProblemSpec,
    build_g_block,
    dynamics,
    is_rci,
    stage_cost,
    transition_feasible,
)
from .qp_solver import (
    QpBuilder,
    QpProblem,
    QpSolution,
    QpStatus,
    SolverFailure,
    SolverSettings,
    solve,
    verify_kkt,
)
from .cost_to_travel import CostToTravelResult, RciNotFound, bellman_gap, eval_v, optimal_rci
from .dissipativity import (
    SeparabilityReport,
    StorageFunction,
    StrictnessSummary,
    check_strictness,
    eval_storage,
    storage_min_on_domain,
    verify_separability,
)
from .tube_mpc import (
    ControllerInfeasible,
    TubeMpcConfig,
    TubeSolution,
    TubeStepInfeasible,
    feedback,
    mu_feedback,
    solve_tmpc,
    sweep_feedback,
)
from .closed_loop import (
    AdversarialPolicy,
    EnclosureStabilityReport,
    ExtremePolicy,
    SimulationTrace,
    TraceStep,
    UniformRandomPolicy,
    check_enclosure_stability,
    lyapunov_value,
    rotated_cost,
    simulate,
)

__version__ = "0.1.0"
