"""
Поля коэффициентов: снос f, диффузия g, косая матрица H, функции стоимости b и α.

Соглашение о формах: состояния частиц - массив (N, m); f -> (N, m); g -> (N, m, d);
H(x, μ) -> (N, m, m), H(t) -> (m, m). Управление u - общее значение для всех частиц.
"""
from typing import Any, Callable, Iterable, Optional, Sequence

import numpy as np

from config import settings
from logger_config import logger
from measures import EmpiricalMeasure, dirac
from utils.errors import ConfigurationError, ShapeError

DriftFn = Callable[[np.ndarray, EmpiricalMeasure, Any, float], np.ndarray]
MatrixFn = Callable[[np.ndarray, EmpiricalMeasure], np.ndarray]
TimeMatrixFn = Callable[[float], np.ndarray]


class CoefficientField:
    """
    Коэффициенты f(x, μ, u, t), g(x, μ, u, t) с объявленной константой Липшица L.
    normalized=True требует f(0, δ₀, u) = g(0, δ₀, u) = 0 (проверяется при создании).
    """

    def __init__(self, drift: DriftFn, diffusion: DriftFn, dim: int, noise_dim: int, lipschitz: float,
                 name: str = "custom", normalized: bool = True, controls: Optional[Sequence[Any]] = None,
                 state_dependent: bool = True, measure_dependent: bool = True, time_dependent: bool = False):
        if lipschitz <= 0:
            raise ConfigurationError(f"константа Липшица должна быть положительной, получено {lipschitz}",
                                     field="lipschitz")
        self._drift = drift
        self._diffusion = diffusion
        self.dim = dim
        self.noise_dim = noise_dim
        self.lipschitz = float(lipschitz)
        self.name = name
        self.normalized = normalized
        self.state_dependent = state_dependent
        self.measure_dependent = measure_dependent
        self.time_dependent = time_dependent
        if normalized:
            self.check_normalization(controls)

    def drift(self, x: np.ndarray, mu: EmpiricalMeasure, u: Any = None, t: float = 0.0) -> np.ndarray:
        out = np.asarray(self._drift(x, mu, u, t), dtype=float)
        return np.broadcast_to(out, x.shape)

    def diffusion(self, x: np.ndarray, mu: EmpiricalMeasure, u: Any = None, t: float = 0.0) -> np.ndarray:
        out = np.asarray(self._diffusion(x, mu, u, t), dtype=float)
        shape = (len(x), self.dim, self.noise_dim)
        try:
            return np.broadcast_to(out, shape)
        except ValueError:
            raise ShapeError(f"диффузия '{self.name}' вернула форму {out.shape}, ожидалась {shape}")

    def check_normalization(self, controls: Optional[Iterable[Any]] = None):
        """f(0, δ₀, u) = 0 и g(0, δ₀, u) = 0 с точностью 1e-12"""
        origin = np.zeros((1, self.dim))
        delta0 = dirac(np.zeros(self.dim))
        for u in (list(controls) if controls is not None else [None]):
            f0 = np.abs(self.drift(origin, delta0, u, 0.0)).max()
            g0 = np.abs(self.diffusion(origin, delta0, u, 0.0)).max()
            if max(f0, g0) > settings.tolerances.arithmetic:
                raise ConfigurationError(
                    f"коэффициенты '{self.name}' не нормированы: |f(0, δ₀, {u})| = {f0:.3e}, "
                    f"|g(0, δ₀, {u})| = {g0:.3e}", field="coefficients")


class ObliqueField:
    """
    Косая матрица H: либо H(x, μ) (зависит от состояния и меры), либо H(t) (зависит от времени).
    a_H, b_H - объявленные границы эллиптичности; derivative - аналитическая H'(t).
    """

    def __init__(self, dim: int, a_H: float, b_H: float, matrix: Optional[MatrixFn] = None,
                 time_matrix: Optional[TimeMatrixFn] = None, derivative: Optional[TimeMatrixFn] = None,
                 lipschitz: Optional[float] = None, name: str = "custom"):
        if (matrix is None) == (time_matrix is None):
            raise ConfigurationError("нужно задать ровно одно из: H(x, μ) или H(t)", field="oblique")
        if not 0 < a_H <= b_H:
            raise ConfigurationError(f"границы эллиптичности должны удовлетворять 0 < a_H ≤ b_H "
                                     f"(a_H={a_H}, b_H={b_H})", field="oblique")
        self.dim = dim
        self.a_H = float(a_H)
        self.b_H = float(b_H)
        self._matrix = matrix
        self._time_matrix = time_matrix
        self._derivative = derivative
        self.lipschitz = lipschitz
        self.name = name
        self.derivative_fallback_used = False

    @classmethod
    def constant(cls, H, name: str = "constant") -> "ObliqueField":
        H = np.atleast_2d(np.asarray(H, dtype=float))
        w = np.linalg.eigvalsh(0.5 * (H + H.T))
        return cls(dim=H.shape[0], a_H=float(w.min()), b_H=float(w.max()),
                   time_matrix=lambda t: H, derivative=lambda t: np.zeros_like(H), lipschitz=0.0, name=name)

    @property
    def time_dependent(self) -> bool:
        return self._time_matrix is not None

    @property
    def has_analytic_derivative(self) -> bool:
        return self._derivative is not None

    def at_time(self, t: float) -> np.ndarray:
        if not self.time_dependent:
            raise ConfigurationError(f"H '{self.name}' зависит от состояния, H(t) не определена", field="oblique")
        return np.asarray(self._time_matrix(t), dtype=float).reshape(self.dim, self.dim)

    def evaluate(self, x: np.ndarray, mu: EmpiricalMeasure, t: float = 0.0) -> np.ndarray:
        """H для каждой частицы: (N, m, m)"""
        if self.time_dependent:
            return np.broadcast_to(self.at_time(t), (len(x), self.dim, self.dim))
        out = np.asarray(self._matrix(x, mu), dtype=float)
        return np.broadcast_to(out, (len(x), self.dim, self.dim))

    def derivative_at(self, t: float, step: Optional[float] = None) -> np.ndarray:
        """
        H'(t): аналитическая, если задана; иначе центральная разность с шагом step
        (использование разности отмечается флагом derivative_fallback_used).
        """
        if self._derivative is not None:
            return np.asarray(self._derivative(t), dtype=float).reshape(self.dim, self.dim)
        if step is None:
            raise ConfigurationError("для разностной производной H'(t) нужен шаг", field="derivative")
        if not self.derivative_fallback_used:
            logger.warning(f"⚠️ H'(t) для '{self.name}' не задана: используется центральная разность, шаг {step:.3e}")
        self.derivative_fallback_used = True
        return (self.at_time(t + step) - self.at_time(t - step)) / (2 * step)


class CostField:
    """Текущая стоимость b(x, u) и терминальная α(x); b(0, u) = α(0) = 0"""

    def __init__(self, running: Callable[[np.ndarray, Any], np.ndarray], terminal: Callable[[np.ndarray], np.ndarray],
                 lipschitz: float, name: str = "custom", controls: Optional[Sequence[Any]] = None, dim: int = 1):
        self._running = running
        self._terminal = terminal
        self.lipschitz = float(lipschitz)
        self.name = name
        self.dim = dim
        origin = np.zeros((1, dim))
        for u in (list(controls) if controls is not None else [None]):
            b0 = abs(float(np.asarray(self.running(origin, u))[0]))
            a0 = abs(float(np.asarray(self.terminal(origin))[0]))
            if max(b0, a0) > settings.tolerances.arithmetic:
                raise ConfigurationError(f"стоимость '{name}' не нормирована: b(0, {u}) = {b0:.3e}, α(0) = {a0:.3e}",
                                         field="costs")

    def running(self, x: np.ndarray, u: Any) -> np.ndarray:
        return np.broadcast_to(np.asarray(self._running(x, u), dtype=float), (len(x),))

    def terminal(self, x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(self._terminal(x), dtype=float), (len(x),))

    def scaled(self, factor: float) -> "CostField":
        """Стоимость, умноженная на положительную константу"""
        return CostField(lambda x, u: factor * self.running(x, u), lambda x: factor * self.terminal(x),
                         lipschitz=abs(factor) * self.lipschitz, name=f"{factor}*{self.name}", dim=self.dim,
                         controls=())
