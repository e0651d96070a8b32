"""Newton-type solvers for Nash and generalized Nash equilibrium problems,
with perturbed and agent-distributed variants and a game-theoretic MPC loop."""

from .affine_vi import (
    AffineViProblem,
    ViSolution,
    enumerate_active_set_solution,
    natural_map_residual,
    solve_affine_vi,
)
from .errors import (
    CapabilityError,
    ConfigError,
    ConstraintsNotCommon,
    DegenerateFit,
    Diverged,
    GameSolverError,
    InnerSolveFailed,
    InputError,
    MultipleSolutions,
    NonIsolated,
    NoSolution,
    NotConverged,
    OuterCycleDetected,
    SingularJacobian,
    TooFewPoints,
)
from .fitting import (
    IssFit,
    QRateEstimate,
    dominating_fit,
    estimate_iss_constants,
    estimate_q_rate,
)
from .games import (
    CallableConstraint,
    CallableCost,
    CriticalCone,
    GameProblem,
    LinearConstraint,
    QuadraticCost,
    check_monotonicity,
    check_strict_semicopositivity,
    critical_cone,
    game_hessian,
    orthant_cone,
    pseudogradient,
)
from .josephy import (
    IterateTrace,
    NewtonConfig,
    PerturbationSpec,
    distributed_jn_mechanism1,
    distributed_jn_mechanism2,
    josephy_newton,
    josephy_newton_vi,
    perturbed_josephy_newton,
)
from .kkt import (
    JacobianElement,
    PrimalDualPoint,
    assemble_phi,
    check_quasi_regularity,
    distributed_semismooth_newton,
    init_multipliers,
    limiting_jacobian,
    perturbed_semismooth_newton,
    semismooth_newton,
    vgne_reduce,
)
from .mpc import (
    AgentCost,
    AgentPlant,
    ClosedLoopLog,
    MpcScenario,
    ParameterizedGame,
    build_parameterized_game,
    estimate_contraction,
    reference_solution,
    run_closed_loop,
    tdo_step,
)
from .oracles import oracle_registry
from .problems import (
    load_game_file,
    load_scenario_file,
    own_constraint_gne,
    own_constraint_solution,
    pursuit_scenario,
    quartic_game,
    quartic_solution,
    random_quadratic_game,
    nonmonotone_semicopositive_game,
    shared_constraint_gne,
    shared_constraint_solution,
    standard_quadratic_game,
)
from .report import ExperimentConfig, Report, parse_config, run_experiment
from .sets import Box, Polyhedron, unbounded_box

__version__ = "0.1.0"
