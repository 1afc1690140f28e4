from timedep.problem import CORRECTIONS, MovingConstraintProblem, lift_solution, reduce_time_dependent
from timedep.equivalence import equivalence_check, interval_bounds, moving_feasibility, simulate_moving_interval
from timedep.library import MOVING_PROBLEMS, build_moving_problem, moving_ball, moving_interval

__all__ = [
    "CORRECTIONS", "MovingConstraintProblem", "lift_solution", "reduce_time_dependent",
    "equivalence_check", "interval_bounds", "moving_feasibility", "simulate_moving_interval",
    "MOVING_PROBLEMS", "build_moving_problem", "moving_ball", "moving_interval",
]
