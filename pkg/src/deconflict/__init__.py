"""Aircraft conflict resolution toolkit.

Candidate trajectories are generated per aircraft from a discretised
manoeuvre catalog, checked pairwise for separation, and a minimum-fuel
mutually compatible selection is found by best-first clique search (sbf),
a greedy pass, or an external wcsp solver.
"""

from .errors import (
    ContractViolation,
    DeconflictError,
    DomainError,
    InstanceFormatError,
    ParameterError,
    ResourceLimitError,
    UnsolvableInstanceError,
)
from .model import (
    AircraftSpec,
    AircraftState,
    ConflictInstance,
    DiscretisationParams,
    FuelCategory,
    ManoeuvreOrder,
    OrderKind,
    PerformanceEnvelope,
    SeparationParams,
    Trajectory,
    TrajectorySegment,
    Violation,
    position_at,
    validate_instance,
)
from .trajgen import (
    CandidateSet,
    GenerationStats,
    ManoeuvreCatalog,
    build_candidate_set,
    build_catalog,
    count_bound,
    generate,
    trajectory_cost,
)
from .separation import (
    CompatibilityCache,
    CompatibilityMatrix,
    build_matrix,
    check_pair_cached,
    compatible,
    min_distance,
)
from .sbf import Solution, SolveResult, SolveStatus, solve_oracle, solve_sbf
from .greedy import GreedySolution, solve_greedy
from .wcsp import (
    ExternalResult,
    ExternalStatus,
    WcspInstance,
    export_wcsp,
    formalize_wcsp,
    parse_wcsp,
    run_external_solver,
    wcsp_exhaustive_optimum,
)
from .bench import (
    IterateResult,
    RunRecord,
    ScenarioKind,
    ScenarioSpec,
    aggregate,
    iterate_anytime,
    make_crossing,
    make_instance,
    make_roundabout,
    run_campaign,
    write_csv,
)
from .instancefile import load_instance, save_instance

__version__ = "0.1.0"
