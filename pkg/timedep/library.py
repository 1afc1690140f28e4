"""
Встроенные задачи с подвижным ограничением.
"""
from typing import Callable, Dict, Sequence

import numpy as np

from convexcore import Ball, Box, ConvexConstraint
from dynamics.fields import CoefficientField
from dynamics.library import time_oblique_field
from timedep.problem import MovingConstraintProblem
from utils.errors import ConfigurationError


def moving_interval(family: str = "affine", lower: float = 0.0, upper: float = 1.0, drift: float = 1.0,
                    sigma: float = 0.3, x0: float = 0.5, horizon: Sequence[float] = (0.0, 1.0),
                    **params) -> MovingConstraintProblem:
    """x(t) ∈ [H(t)·lower, H(t)·upper], f ≡ drift (наружу при drift > 0), g ≡ sigma"""
    params.setdefault("H0", 1.0)
    params.setdefault("H1", 1.0)
    oblique = time_oblique_field(family, horizon, dim=1, **params)
    coefficients = CoefficientField(lambda x, mu, u, t: np.full_like(x, drift),
                                    lambda x, mu, u, t: np.full((len(x), 1, 1), sigma),
                                    dim=1, noise_dim=1, lipschitz=1e-12, name=f"const({drift}, {sigma})",
                                    normalized=False, state_dependent=False, measure_dependent=False)
    return MovingConstraintProblem(ConvexConstraint.indicator(Box([lower], [upper])), oblique, coefficients,
                                   [x0], horizon, name=f"interval-{family}")


def moving_ball(family: str = "rotation-scaled", radius: float = 1.0, reversion: float = 0.5, sigma: float = 0.3,
                x0: Sequence[float] = (0.0, 0.0), horizon: Sequence[float] = (0.0, 1.0),
                **params) -> MovingConstraintProblem:
    """x(t) ∈ H(t)·B(0, radius) ⊂ ℝ², f = -reversion·(x - E x) + наружный сдвиг, g = sigma·I"""

    def f(x, mu, u, t):
        return -reversion * (x - mu.mean()) + 0.5 * np.array([1.0, 0.0])

    oblique = time_oblique_field(family, horizon, dim=2, **params)
    coefficients = CoefficientField(f, lambda x, mu, u, t: np.broadcast_to(sigma * np.eye(2), (len(x), 2, 2)),
                                    dim=2, noise_dim=2,
                                    lipschitz=2 * reversion + 1e-12, name="mean-reverting", normalized=False)
    return MovingConstraintProblem(ConvexConstraint.indicator(Ball([0.0, 0.0], radius)), oblique, coefficients,
                                   x0, horizon, name=f"ball-{family}")


MOVING_PROBLEMS: Dict[str, Callable[..., MovingConstraintProblem]] = {
    "interval": moving_interval,
    "ball": moving_ball,
}


def build_moving_problem(name: str, **params) -> MovingConstraintProblem:
    try:
        builder = MOVING_PROBLEMS[name]
    except KeyError:
        raise ConfigurationError(f"неизвестная задача '{name}', доступны: {', '.join(sorted(MOVING_PROBLEMS))}",
                                 field="timedep.problem")
    try:
        return builder(**params)
    except TypeError as e:
        raise ConfigurationError(f"неверные параметры задачи '{name}': {e}", field="timedep.params")
