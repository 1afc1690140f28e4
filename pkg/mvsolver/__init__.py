from mvsolver.grid import TimeGrid
from mvsolver.noise import NoiseSource
from mvsolver.skorohod import oblique_skorohod_step, skorohod_points
from mvsolver.paths import (
    ConstrainedPath,
    PathEnsemble,
    load_trajectories,
    save_trajectories,
    stack_states,
    sup_distance_squared,
)
from mvsolver.schemas import ConvergenceEntry, ConvergenceReport, SolutionDiagnostics
from mvsolver.schemes import (
    EulerIterationResult,
    brownian_increments,
    check_stability,
    compare_schemes,
    euler_iteration,
    is_decreasing,
    mean_and_stderr,
    run_replications,
    simulate_penalized,
    simulate_projected,
)
from mvsolver.diagnostics import (
    complementarity,
    default_probes,
    interior_bound_check,
    interior_bound_margin,
    normal_cone_consistency,
    residual_report,
)

__all__ = [
    "TimeGrid", "NoiseSource", "oblique_skorohod_step", "skorohod_points",
    "ConstrainedPath", "PathEnsemble", "load_trajectories", "save_trajectories", "stack_states",
    "sup_distance_squared", "ConvergenceEntry", "ConvergenceReport", "SolutionDiagnostics",
    "EulerIterationResult", "brownian_increments", "check_stability", "compare_schemes", "euler_iteration",
    "is_decreasing", "mean_and_stderr", "run_replications", "simulate_penalized", "simulate_projected",
    "complementarity", "default_probes", "interior_bound_check", "interior_bound_margin", "normal_cone_consistency",
    "residual_report",
]
