"""
Управляемая система со средним полем и кусочно-постоянные управления на конечной сетке.
"""
import itertools
from typing import Any, List, Optional, Sequence

import numpy as np

from config import settings
from control.schemas import SimulationConfig
from convexcore import ConvexConstraint
from dynamics.fields import CoefficientField, CostField, ObliqueField
from dynamics.library import half_line
from dynamics.system import MVSystem
from dynamics.validators import Sampler, validate_cost, validate_lipschitz, validate_oblique
from mvsolver import NoiseSource, PathEnsemble, TimeGrid, simulate_penalized, simulate_projected
from utils.errors import ConfigurationError


class ControlProblem:
    """
    dx + H(t)∂Π(x)dt ∋ f(x, μ, u)dt + g(x, μ, u)dB на [s, T], x(s) = x₀;
    J(s, x₀; u) = E[∫_s^T b(x, u)dt + α(x(T))].
    """

    def __init__(self, coefficients: CoefficientField, oblique: ObliqueField, constraint: ConvexConstraint,
                 costs: CostField, controls: Sequence[Any], x0: Sequence[float],
                 horizon: Sequence[float] = (0.0, 1.0), name: str = "control"):
        controls = list(controls)
        if not controls:
            raise ConfigurationError("множество управлений пусто", field="control.controls")
        if not oblique.time_dependent:
            raise ConfigurationError("в задаче управления допускается только H(t)", field="control.oblique")
        if not horizon[0] < horizon[1]:
            raise ConfigurationError(f"нужно s < T, получено {tuple(horizon)}", field="control.horizon")
        self.coefficients = coefficients
        self.oblique = oblique
        self.constraint = constraint
        self.costs = costs
        self.controls = controls
        self.x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        self.horizon = (float(horizon[0]), float(horizon[1]))
        self.name = name

    @property
    def dim(self) -> int:
        return self.x0.size

    @property
    def system(self) -> MVSystem:
        return MVSystem(self.constraint, self.coefficients, self.oblique, self.x0, name=self.name)

    def restart(self, start: Optional[float] = None, x0: Optional[Sequence[float]] = None) -> "ControlProblem":
        """Та же задача из другой начальной точки (s, x₀)"""
        horizon = (self.horizon[0] if start is None else float(start), self.horizon[1])
        return ControlProblem(self.coefficients, self.oblique, self.constraint, self.costs, self.controls,
                              self.x0 if x0 is None else x0, horizon, self.name)

    def restrict(self, controls: Sequence[Any]) -> "ControlProblem":
        return ControlProblem(self.coefficients, self.oblique, self.constraint, self.costs, controls, self.x0,
                              self.horizon, self.name)

    def with_costs(self, costs: CostField) -> "ControlProblem":
        return ControlProblem(self.coefficients, self.oblique, self.constraint, costs, self.controls, self.x0,
                              self.horizon, self.name)

    def grid(self, steps: int) -> TimeGrid:
        return TimeGrid(*self.horizon, steps)

    def control_family(self, switches: int = 0) -> List[tuple]:
        """Все последовательности значений на switches + 1 равных отрезках"""
        size = len(self.controls) ** (switches + 1)
        if size > settings.iteration.control_family_limit:
            raise ConfigurationError(f"семейство управлений |U|^{switches + 1} = {size} превышает "
                                     f"{settings.iteration.control_family_limit}", field="control.switches")
        return list(itertools.product(self.controls, repeat=switches + 1))

    def validate(self, seed: Optional[int] = None, pairs: int = 1000) -> list:
        """Отчёты проверок коэффициентов, H(t) и стоимостей"""
        sampler = Sampler(self.dim, seed=seed, horizon=self.horizon)
        return [validate_lipschitz(self.coefficients, sampler, pairs=pairs, controls=self.controls),
                validate_oblique(self.oblique, sampler, samples=pairs),
                validate_cost(self.costs, sampler, self.controls, pairs=pairs)]


def schedule(sequence: Sequence[Any], steps: int) -> List[Any]:
    """Кусочно-постоянное управление: значение sequence[j] на j-м из len(sequence) равных отрезков"""
    pieces = len(sequence)
    return [sequence[min(k * pieces // steps, pieces - 1)] for k in range(steps)]


def simulate_control(prob: ControlProblem, controls: Sequence[Any], sim: SimulationConfig, grid: TimeGrid,
                     replication: int = 0, increments: Optional[np.ndarray] = None,
                     particles: Optional[int] = None) -> PathEnsemble:
    """Одна репликация под управлением controls (по одному значению на шаг); шум общий для всех управлений"""
    system = prob.system
    particles = sim.particles if particles is None else particles
    noise = NoiseSource(sim.seed, replication)
    if sim.scheme == "penalized":
        return simulate_penalized(system, sim.eps, grid, particles, noise, controls=controls, increments=increments)
    return simulate_projected(system, grid, particles, noise, controls=controls, increments=increments)


def two_control(x0: float = 0.5, sigma: float = 0.0, drift: float = 1.0, horizon: Sequence[float] = (0.0, 1.0),
                terminal: float = 0.0) -> ControlProblem:
    """
    1D задача на [0, ∞): f = u, u ∈ {-drift, +drift}, g ≡ sigma, H ≡ 1,
    b(x, u) = |x|, α(x) = terminal·|x|.
    """
    coefficients = CoefficientField(lambda x, mu, u, t: np.full_like(x, u),
                                    lambda x, mu, u, t: np.full((len(x), 1, 1), sigma),
                                    dim=1, noise_dim=1, lipschitz=1e-12, name="two_control", normalized=False,
                                    state_dependent=False, measure_dependent=False)
    costs = CostField(lambda x, u: np.abs(x[:, 0]), lambda x: terminal * np.abs(x[:, 0]),
                      lipschitz=1.0 + abs(terminal), name="|x|", controls=(-drift, drift))
    return ControlProblem(coefficients, ObliqueField.constant([[1.0]]), half_line(), costs, (-drift, drift),
                          [x0], horizon, name="two_control")


def reflected_ou_control(theta: float = 1.0, sigma: float = 1.0, x0: float = 0.0,
                         horizon: Sequence[float] = (0.0, 1.0)) -> ControlProblem:
    """Отражённый OU на [0, ∞) с единственным управлением и b = |x|, α = |x|"""
    coefficients = CoefficientField(lambda x, mu, u, t: -theta * x,
                                    lambda x, mu, u, t: np.full((len(x), 1, 1), sigma),
                                    dim=1, noise_dim=1, lipschitz=max(abs(theta), 1e-12), name="ou",
                                    normalized=False)
    costs = CostField(lambda x, u: np.abs(x[:, 0]), lambda x: np.abs(x[:, 0]), lipschitz=2.0, name="|x|")
    return ControlProblem(coefficients, ObliqueField.constant([[1.0]]), half_line(), costs, [0.0], [x0], horizon,
                          name="reflected_ou")
