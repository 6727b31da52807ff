"""Legal affine schedule spaces for loop nests, explored as two decision processes.

The package builds, from a static-control loop nest description:

1. an exact dependence model (memory-based dependence polyhedra),
2. per-dimension legal schedule-coefficient polytopes via the affine form of
   Farkas' lemma, converted to vertex/ray generators,
3. a deterministic *construction* decision process that assigns each
   dependence to the schedule dimension that carries it strongly, and
4. a deterministic *exploration* decision process that picks one integer
   schedule point out of the constructed space,

plus legality certification, a locality proxy cost, reward plumbing, and a
command-line explorer.  All schedule arithmetic is exact.
"""

__api_version__ = "1"

from .geometry import (
    ConstraintKind,
    Generator,
    GeneratorKind,
    GeneratorSet,
    HPolyhedron,
    LinearConstraint,
    ResourceError,
    chernikova,
    contains,
    enumerate_lattice_points,
    eq,
    ineq,
    is_empty,
    lcd_scale,
    project_generators,
)
from .scop import (
    Access,
    AccessKind,
    AffineForm,
    Dependence,
    Scop,
    Statement,
    ValidationError,
    compute_memory_dependences,
    parse_scop,
    serialize_scop,
    validate_binding,
)
from .farkas import (
    CoefficientLayout,
    DimensionSpace,
    FarkasSystem,
    ScheduleSpace,
    SpaceBuilder,
    build_schedule_space,
    dimension_generators,
    legality_system,
    make_layout,
)
from .construction import (
    ConstructionAction,
    ConstructionConfig,
    ConstructionState,
    InvalidActionError,
    cons_is_terminal,
    cons_reset,
    cons_step,
    cons_valid_actions,
    default_max_dims,
)
from .exploration import (
    ExplorationConfig,
    ExplorationState,
    SlotLayout,
    expl_is_terminal,
    expl_reset,
    expl_step,
    make_slot_layout,
    materialize_point,
)
from .evaluation import (
    PROXY_MODEL_VERSION,
    DependenceVerdict,
    EpisodeOutcome,
    LegalityReport,
    MeasurementError,
    OutcomeKind,
    RewardConfig,
    RewardMode,
    Schedule,
    check_legality,
    compute_reward,
    export_schedule,
    identity_schedule,
    import_measurement,
    proxy_cost,
    schedule_from_json,
    schedule_from_points,
    schedule_to_json,
)
from .explorer import (
    EpisodeRecord,
    Heuristic,
    RunResult,
    ScheduleSession,
    choose_coefficient,
    choose_construction_action,
    emit_stats,
    load_trace,
    replay_trace,
    run_explore,
)

__all__ = [
    "__api_version__",
    # geometry
    "ConstraintKind",
    "LinearConstraint",
    "HPolyhedron",
    "Generator",
    "GeneratorKind",
    "GeneratorSet",
    "ResourceError",
    "chernikova",
    "project_generators",
    "contains",
    "is_empty",
    "enumerate_lattice_points",
    "lcd_scale",
    "ineq",
    "eq",
    # SCoP model
    "AccessKind",
    "AffineForm",
    "Access",
    "Statement",
    "Dependence",
    "Scop",
    "ValidationError",
    "parse_scop",
    "serialize_scop",
    "validate_binding",
    "compute_memory_dependences",
    # schedule spaces
    "CoefficientLayout",
    "FarkasSystem",
    "DimensionSpace",
    "ScheduleSpace",
    "SpaceBuilder",
    "make_layout",
    "legality_system",
    "dimension_generators",
    "build_schedule_space",
    # construction process
    "ConstructionAction",
    "ConstructionConfig",
    "ConstructionState",
    "InvalidActionError",
    "default_max_dims",
    "cons_reset",
    "cons_is_terminal",
    "cons_valid_actions",
    "cons_step",
    # exploration process
    "ExplorationConfig",
    "ExplorationState",
    "SlotLayout",
    "make_slot_layout",
    "expl_reset",
    "expl_is_terminal",
    "expl_step",
    "materialize_point",
    # evaluation
    "PROXY_MODEL_VERSION",
    "Schedule",
    "identity_schedule",
    "schedule_from_points",
    "DependenceVerdict",
    "LegalityReport",
    "check_legality",
    "proxy_cost",
    "OutcomeKind",
    "EpisodeOutcome",
    "RewardMode",
    "RewardConfig",
    "MeasurementError",
    "import_measurement",
    "compute_reward",
    "export_schedule",
    "schedule_to_json",
    "schedule_from_json",
    # explorer
    "Heuristic",
    "ScheduleSession",
    "EpisodeRecord",
    "RunResult",
    "run_explore",
    "replay_trace",
    "load_trace",
    "emit_stats",
    "choose_construction_action",
    "choose_coefficient",
]
