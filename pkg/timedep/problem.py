"""
Сведение задачи с подвижным ограничением x(t) ∈ H(t)Ξ к задаче с косым субградиентом
на неподвижном Ξ заменой x̄ = H⁻¹(t)x.
"""
from typing import Optional, Sequence, Union

import numpy as np

from convexcore import ConvexConstraint
from dynamics.fields import CoefficientField, ObliqueField
from dynamics.spectral import inverse_spd
from dynamics.system import MVSystem
from dynamics.validators import Sampler, derivative_bound, validate_oblique
from logger_config import logger
from mvsolver.paths import PathEnsemble
from utils.errors import ConfigurationError, ReductionError, ShapeError

# as-printed: f̄ = H⁻¹(f(Hx̄) + H'x̄), ḡ = H⁻¹(g(Hx̄) + H'x̄) (H'x̄ прибавляется к каждому столбцу g);
# drift-only: поправка только в сносе и со знаком цепного правила d(H⁻¹x) = -H⁻¹H'H⁻¹x dt
CORRECTIONS = ("as-printed", "drift-only")


class MovingConstraintProblem:
    """dx + ∂I_{H(t)Ξ}(x)dt ∋ f(x, μ_t∘H(t))dt + g(x, μ_t∘H(t))dB,  x(t₀) = x₀"""

    def __init__(self, base: ConvexConstraint, oblique: ObliqueField, coefficients: CoefficientField,
                 x0: Sequence[float], horizon: Sequence[float] = (0.0, 1.0), name: str = "moving"):
        base.require_indicator("MovingConstraintProblem")
        if not oblique.time_dependent:
            raise ConfigurationError("для подвижного ограничения нужна H(t)", field="timedep.family")
        if len({base.dim, oblique.dim, coefficients.dim}) != 1:
            raise ConfigurationError("размерности Ξ, H(t) и коэффициентов различаются", field="timedep")
        self.base = base
        self.oblique = oblique
        self.coefficients = coefficients
        self.x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        self.horizon = (float(horizon[0]), float(horizon[1]))
        self.name = name
        self.derivative_step = 1e-6 * (self.horizon[1] - self.horizon[0])

        x0_bar = inverse_spd(oblique.at_time(self.horizon[0])) @ self.x0
        if not base.in_domain(x0_bar):
            raise ReductionError(f"x₀ = {self.x0.tolist()} не лежит в H(t₀)Ξ", field="x0")

    @property
    def dim(self) -> int:
        return self.x0.size

    def matrix(self, t: float) -> np.ndarray:
        return self.oblique.at_time(t)

    def derivative(self, t: float) -> np.ndarray:
        return self.oblique.derivative_at(t, self.derivative_step)

    def validate(self, samples: int = 500, seed: Optional[int] = None):
        """Равномерная эллиптичность и гладкость H(t) на выборке моментов; ошибка сведения при нарушении"""
        report = validate_oblique(self.oblique, Sampler(self.dim, seed=seed, horizon=self.horizon), samples)
        if not report.passed:
            raise ReductionError(f"H(t) '{self.oblique.name}' нарушает условия эллиптичности: "
                                 f"{'; '.join(report.violations)}", field="timedep")
        return report


def _reduced_oblique(prob: MovingConstraintProblem) -> ObliqueField:
    """(H⁻¹(t))² с производной -(H⁻¹H'H⁻²+ H⁻²H'H⁻¹)"""
    oblique = prob.oblique

    def matrix(t):
        inv = inverse_spd(oblique.at_time(t))
        return inv @ inv

    def derivative(t):
        inv = inverse_spd(oblique.at_time(t))
        dH = prob.derivative(t)
        return -(inv @ dH @ inv @ inv + inv @ inv @ dH @ inv)

    return ObliqueField(dim=prob.dim, a_H=1.0 / oblique.b_H ** 2, b_H=1.0 / oblique.a_H ** 2, time_matrix=matrix,
                        derivative=derivative, name=f"inv({oblique.name})^2")


def reduce_time_dependent(prob: MovingConstraintProblem, correction: str = "as-printed",
                          validate: bool = True) -> MVSystem:
    """
    Система на неподвижном Ξ: косая матрица (H⁻¹)², x̄(t₀) = H⁻¹(t₀)x₀,
    мера в коэффициентах - эмпирический закон x̄ (он же μ_t∘H(t)).
    """
    if correction not in CORRECTIONS:
        raise ConfigurationError(f"неизвестная поправка '{correction}', доступны: {CORRECTIONS}",
                                 field="timedep.correction")
    if validate:
        prob.validate()
    base, oblique = prob.coefficients, prob.oblique
    sign = 1.0 if correction == "as-printed" else -1.0

    def drift(xb, mub, u, t):
        H = oblique.at_time(t)
        out = base.drift(xb @ H.T, mub, u, t) + sign * xb @ prob.derivative(t).T
        return out @ inverse_spd(H).T

    def diffusion(xb, mub, u, t):
        H = oblique.at_time(t)
        g = np.array(base.diffusion(xb @ H.T, mub, u, t))
        if correction == "as-printed":
            g = g + (xb @ prob.derivative(t).T)[:, :, None]
        return np.einsum("ij,njd->nid", inverse_spd(H), g)

    M = derivative_bound(oblique, prob.horizon).M
    lipschitz = (base.lipschitz * oblique.b_H + (2 if correction == "as-printed" else 1) * M) / oblique.a_H
    coefficients = CoefficientField(drift, diffusion, dim=base.dim, noise_dim=base.noise_dim,
                                    lipschitz=max(lipschitz, 1e-12), name=f"reduced({base.name}, {correction})",
                                    normalized=False, time_dependent=True)
    x0_bar = inverse_spd(oblique.at_time(prob.horizon[0])) @ prob.x0
    system = MVSystem(prob.base, coefficients, _reduced_oblique(prob), x0_bar, name=f"reduced-{prob.name}",
                      description=f"x̄ = H⁻¹(t)x для H(t) = {oblique.name}, поправка {correction}",
                      notes=["нормировка в (0, δ₀) для сведённых коэффициентов не проверяется"])
    logger.debug(f"🔹 Сведение '{prob.name}' ({correction}): L̄ = {lipschitz:.4g}, M = {M:.4g}")
    return system


def lift_solution(path: PathEnsemble, H: Union[ObliqueField, np.ndarray]) -> PathEnsemble:
    """
    x(t_k) = H(t_k)x̄(t_k) в каждом узле; отражение Δk = H⁻¹(t_k)Δk̄.
    H - поле H(t) либо массив матриц по узлам сетки (S+1, m, m).
    """
    times = path.times
    if isinstance(H, ObliqueField):
        matrices = np.stack([H.at_time(t) for t in times])
    else:
        matrices = np.asarray(H, dtype=float)
        if matrices.ndim == 1:
            matrices = matrices[:, None, None]
        if len(matrices) != len(times):
            raise ShapeError(f"матриц H {len(matrices)}, а узлов сетки {len(times)}", field="H")
    if matrices.shape[1:] != (path.dim, path.dim):
        raise ShapeError(f"H формы {matrices.shape[1:]} не подходит к размерности {path.dim}", field="H")
    states = np.einsum("kij,nkj->nki", matrices, path.states)
    increments = np.einsum("kij,nkj->nki", inverse_spd(matrices[:-1]), path.increments)
    return PathEnsemble(path.grid, states, increments, noise=path.noise, controls=path.controls,
                        scheme=path.scheme, eps=path.eps, replication=path.replication)
