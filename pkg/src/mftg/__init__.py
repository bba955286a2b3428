"""Discrete zero-sum mean-field team games: solver, simulator, and tooling.

Two large teams of exchangeable agents play a finite-horizon zero-sum game.
Each agent has a finite state and action set; kernels and the shared team
reward see the populations only through their state distributions.  This
package propagates those distributions exactly at the infinite-population
limit, solves the coordinator game on simplex grids by backward induction,
simulates finite teams reproducibly, and measures how quickly finite play
approaches the limit.
"""

__version__ = "0.1.0"

from .core import (
    Distribution,
    GameModel,
    LipschitzBundle,
    LocalPolicy,
    PurePolicy,
    TeamStrategy,
    build_pairwise_coupled_model,
    empirical_distribution,
    eval_blue_kernel_row,
    eval_red_kernel_row,
    eval_reward,
    lipschitz_violations,
    tv_distance,
)
from .errors import (
    CapacityError,
    CatalogError,
    DegenerateGridError,
    InvalidInputError,
    MftgError,
    ModelValidationError,
    ReachabilityError,
)
from .examples import Fixture, ReferenceValue, fixture_names, load_fixture
from .meanfield import (
    FeasibilityResult,
    ReachableSet,
    TransitionMatrix,
    build_blue_matrix,
    build_red_matrix,
    enumerate_pure_policies,
    extract_policy,
    hausdorff_distance,
    hull_membership,
    mf_step_blue,
    mf_step_red,
    nearest_hull_point,
    reachable_set_blue,
    reachable_set_red,
)
from .simulator import (
    EpisodeLog,
    JointCountState,
    MfGapReport,
    SweepRow,
    approx_local_policy,
    estimate_value,
    exact_blue_optimum_example2,
    exact_red_best_response,
    example2_matching_strategy,
    induced_identical_strategy,
    measure_iid_gap,
    measure_mf_gap,
    simulate_episode,
    suboptimality_sweep,
)
from .solver import (
    AnnouncedMoveExploit,
    CoordinationStrategy,
    SimplexGrid,
    SolveOptions,
    ValueGrid,
    candidate_indices,
    exploit_announced_move,
    greedy_policy,
    iter_compositions,
    lipschitz_value_constant,
    rollout_coordinator,
    solve_lower,
    solve_upper,
)

__all__ = [
    "__version__",
    "AnnouncedMoveExploit",
    "CapacityError",
    "CatalogError",
    "CoordinationStrategy",
    "DegenerateGridError",
    "Distribution",
    "EpisodeLog",
    "FeasibilityResult",
    "Fixture",
    "GameModel",
    "InvalidInputError",
    "JointCountState",
    "LipschitzBundle",
    "LocalPolicy",
    "MfGapReport",
    "MftgError",
    "ModelValidationError",
    "PurePolicy",
    "ReachabilityError",
    "ReachableSet",
    "ReferenceValue",
    "SimplexGrid",
    "SolveOptions",
    "SweepRow",
    "TeamStrategy",
    "TransitionMatrix",
    "ValueGrid",
    "approx_local_policy",
    "build_blue_matrix",
    "build_pairwise_coupled_model",
    "build_red_matrix",
    "candidate_indices",
    "empirical_distribution",
    "enumerate_pure_policies",
    "estimate_value",
    "eval_blue_kernel_row",
    "eval_red_kernel_row",
    "eval_reward",
    "exact_blue_optimum_example2",
    "exact_red_best_response",
    "example2_matching_strategy",
    "exploit_announced_move",
    "extract_policy",
    "fixture_names",
    "greedy_policy",
    "iter_compositions",
    "hausdorff_distance",
    "hull_membership",
    "induced_identical_strategy",
    "lipschitz_value_constant",
    "lipschitz_violations",
    "load_fixture",
    "measure_iid_gap",
    "measure_mf_gap",
    "mf_step_blue",
    "mf_step_red",
    "nearest_hull_point",
    "reachable_set_blue",
    "reachable_set_red",
    "rollout_coordinator",
    "simulate_episode",
    "solve_lower",
    "solve_upper",
    "suboptimality_sweep",
    "tv_distance",
]
