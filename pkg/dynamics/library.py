"""
Встроенная библиотека систем и семейств H(t), выбираемых по имени из конфигурации.
"""
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from convexcore import Ball, ConvexConstraint, HalfSpace
from dynamics.fields import CoefficientField, ObliqueField
from dynamics.system import MVSystem
from measures import EmpiricalMeasure, w2_to_origin
from utils.errors import ConfigurationError

SQRT5 = np.sqrt(5.0)
E = np.e


def half_line() -> ConvexConstraint:
    """[0, ∞) ⊂ ℝ"""
    return ConvexConstraint.indicator(HalfSpace([-1.0], 0.0))


def _diag_field(first: Callable, second: Callable) -> Callable:
    def matrix(x: np.ndarray, mu: EmpiricalMeasure) -> np.ndarray:
        w = w2_to_origin(mu)
        out = np.zeros((len(x), 2, 2))
        out[:, 0, 0] = first(x[:, 0], w)
        out[:, 1, 1] = second(x[:, 0], w)
        return out
    return matrix


def example31(constraint: Optional[ConvexConstraint] = None, x0: Sequence[float] = (0.5, 0.5)) -> MVSystem:
    """
    Диагональная H с синусом, экспонентой и зависимостью от W₂(μ, δ₀):
        H = diag(sin x₁ + 5 + cos W₂, e^{cos x₁} + 4 + (W₂ ∧ 1)),
        f = (√(|x|² + 5) + W₂ - √5)·𝟙,  g = (e^{1∧|x|} + sin W₂ - 1)·I.
    Скалярные f, g сдвинуты на значение в (0, δ₀), чтобы выполнялась нормировка:
    из √(|x|² + 5) + W₂ вычитается √5, из e^{1∧|x|} + sin W₂ вычитается 1.
    Границы спектра H: a_H = 3 = 5 - 1 - 1 (первая компонента снизу),
    b_H = 5 + e = e + 4 + 1 (вторая компонента сверху, первая не больше 7).
    """
    constraint = constraint or ConvexConstraint.indicator(Ball([0.0, 0.0], 2.0))

    def drift(x, mu, u, t):
        s = np.sqrt(np.sum(x ** 2, axis=1) + 5.0) + w2_to_origin(mu) - SQRT5
        return s[:, None] * np.ones(2)

    def diffusion(x, mu, u, t):
        s = np.exp(np.minimum(1.0, np.linalg.norm(x, axis=1))) + np.sin(w2_to_origin(mu)) - 1.0
        return s[:, None, None] * np.eye(2)

    coefficients = CoefficientField(drift, diffusion, dim=2, noise_dim=2,
                                    lipschitz=np.sqrt(2.0) * (1.0 + E), name="example31")
    oblique = ObliqueField(
        dim=2, a_H=3.0, b_H=5.0 + E, lipschitz=2.0 * (1.0 + E), name="example31",
        matrix=_diag_field(lambda x1, w: np.sin(x1) + 5.0 + np.cos(w),
                           lambda x1, w: np.exp(np.cos(x1)) + 4.0 + np.minimum(w, 1.0)),
    )
    return MVSystem(constraint, coefficients, oblique, x0, name="example31",
                    description="H(x, μ) = diag(sin x₁ + 5 + cos W₂(μ, δ₀), e^{cos x₁} + 4 + W₂(μ, δ₀) ∧ 1); "
                                "f = √(|x|² + 5) + W₂(μ, δ₀), g = e^{1∧|x|} + sin W₂(μ, δ₀)",
                    notes=["случай слабого решения: H зависит от состояния и закона",
                           "f, g скалярные: f применяется к каждой координате, g - к каждому столбцу диффузии",
                           "f, g сдвинуты на значения в (0, δ₀) ради нормировки f(0, δ₀) = g(0, δ₀) = 0"])


def example31_strong(constraint: Optional[ConvexConstraint] = None, x0: Sequence[float] = (0.5, 0.5)) -> MVSystem:
    """Тот же снос и диффузия, H(x) = diag(sin x₁ + 5, e^{x₁∧1} + 4 + cos x₁) не зависит от меры"""
    base = example31(constraint, x0)
    oblique = ObliqueField(
        dim=2, a_H=3.0, b_H=5.0 + E, lipschitz=2.0 * (1.0 + E), name="example31_strong",
        matrix=_diag_field(lambda x1, w: np.sin(x1) + 5.0,
                           lambda x1, w: np.exp(np.minimum(x1, 1.0)) + 4.0 + np.cos(x1)),
    )
    return MVSystem(base.constraint, base.coefficients, oblique, base.x0, name="example31_strong",
                    description="H(x) = diag(sin x₁ + 5, e^{x₁∧1} + 4 + cos x₁); f, g как в example31",
                    notes=["случай сильного решения: H не зависит от закона"])


def linear(dim: int = 1, drift_rate: float = -1.0, coupling: float = 0.5, volatility: float = 0.3,
           H: float = 1.0, x0: Optional[Sequence[float]] = None) -> MVSystem:
    """f = a·x + κ·E_μ[x], g = σ·diag(x), H = h·I, ограничение x₁ ≥ -1"""
    def drift(x, mu, u, t):
        return drift_rate * x + coupling * mu.mean()

    def diffusion(x, mu, u, t):
        return volatility * x[:, :, None] * np.eye(dim)[None]

    normal = np.zeros(dim)
    normal[0] = -1.0
    coefficients = CoefficientField(drift, diffusion, dim=dim, noise_dim=dim,
                                    lipschitz=abs(drift_rate) + abs(coupling) + abs(volatility), name="linear")
    x0 = np.full(dim, 0.5) if x0 is None else x0
    return MVSystem(ConvexConstraint.indicator(HalfSpace(normal, 1.0)), coefficients,
                    ObliqueField.constant(H * np.eye(dim)), x0, name="linear",
                    description="линейный снос со средним полем, мультипликативный шум")


def ou(theta: float = 1.0, mean_coupling: float = 0.0, sigma: float = 1.0, H: float = 1.0,
       x0: float = 0.0) -> MVSystem:
    """1D процесс Орнштейна-Уленбека на [0, ∞): f = -θx + κ·E_μ[x], g = σ"""
    def drift(x, mu, u, t):
        return -theta * x + mean_coupling * mu.mean()

    def diffusion(x, mu, u, t):
        return np.full((len(x), 1, 1), sigma)

    coefficients = CoefficientField(drift, diffusion, dim=1, noise_dim=1,
                                    lipschitz=max(abs(theta) + abs(mean_coupling), 1e-12),
                                    name="ou", normalized=False)
    return MVSystem(half_line(), coefficients, ObliqueField.constant([[H]]), [x0], name="ou",
                    description="1D отражённый процесс Орнштейна-Уленбека на [0, ∞)",
                    notes=["аддитивный шум: нормировка g(0, δ₀) = 0 ослаблена"])


def reflected_bm(sigma: float = 1.0, H: float = 1.0, x0: float = 0.0) -> MVSystem:
    """Отражённое броуновское движение на [0, ∞)"""
    coefficients = CoefficientField(lambda x, mu, u, t: np.zeros_like(x),
                                    lambda x, mu, u, t: np.full((len(x), 1, 1), sigma),
                                    dim=1, noise_dim=1, lipschitz=1e-12, name="reflected_bm", normalized=False,
                                    state_dependent=False, measure_dependent=False)
    return MVSystem(half_line(), coefficients, ObliqueField.constant([[H]]), [x0], name="reflected_bm",
                    description="отражённое броуновское движение на [0, ∞)",
                    notes=["аддитивный шум: нормировка g(0, δ₀) = 0 ослаблена"])


def ball_bm(radius: float = 1.0, H: Sequence[float] = (2.0, 1.0), sigma: float = 1.0,
            x0: Sequence[float] = (0.0, 0.0)) -> MVSystem:
    """2D броуновское движение в шаре с постоянной диагональной косой матрицей"""
    coefficients = CoefficientField(lambda x, mu, u, t: np.zeros_like(x),
                                    lambda x, mu, u, t: np.broadcast_to(sigma * np.eye(2), (len(x), 2, 2)),
                                    dim=2, noise_dim=2, lipschitz=1e-12, name="ball_bm", normalized=False,
                                    state_dependent=False, measure_dependent=False)
    return MVSystem(ConvexConstraint.indicator(Ball([0.0, 0.0], radius)), coefficients,
                    ObliqueField.constant(np.diag(H)), x0, name="ball_bm",
                    description=f"броуновское движение в шаре радиуса {radius}, H = diag{tuple(H)}",
                    notes=["аддитивный шум: нормировка g(0, δ₀) = 0 ослаблена"])


SYSTEMS: Dict[str, Callable[..., MVSystem]] = {
    "example31": example31,
    "example31_strong": example31_strong,
    "linear": linear,
    "ou": ou,
    "reflected_bm": reflected_bm,
    "ball_bm": ball_bm,
}


def build_system(name: str, constraint: Optional[ConvexConstraint] = None, **params) -> MVSystem:
    try:
        builder = SYSTEMS[name]
    except KeyError:
        raise ConfigurationError(f"неизвестная система '{name}', доступны: {', '.join(sorted(SYSTEMS))}",
                                 field="system.name")
    try:
        system = builder(**params)
    except TypeError as e:
        raise ConfigurationError(f"неверные параметры системы '{name}': {e}", field="system.params")
    return system.with_constraint(constraint) if constraint is not None else system


# Семейства H(t)

def _matrix_param(value, dim: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    return arr * np.eye(dim) if arr.ndim == 0 else np.atleast_2d(arr)


def _bounds_on_horizon(fn: Callable[[float], np.ndarray], horizon: Sequence[float], nodes: int = 1001):
    times = np.linspace(horizon[0], horizon[1], nodes)
    eig = np.array([np.linalg.eigvalsh(fn(t)) for t in times])
    return float(eig.min()), float(eig.max())


def time_oblique_field(family: str, horizon: Sequence[float] = (0.0, 1.0), dim: int = 1,
                       **params) -> ObliqueField:
    """
    H(t) из именованного семейства с аналитической производной:
        affine:          H(t) = H0 + t·H1
        exponential:     H(t) = e^{κt}·H0
        rotation-scaled: H(t) = (1 + βt)·R(ωt) diag(d) R(ωt)ᵀ  (только m = 2)
        constant:        H(t) = H0
    """
    if family == "affine":
        H0 = _matrix_param(params.get("H0", 1.0), dim)
        H1 = _matrix_param(params.get("H1", 1.0), dim)
        fn, der = (lambda t: H0 + t * H1), (lambda t: H1)
    elif family == "exponential":
        H0 = _matrix_param(params.get("H0", 1.0), dim)
        rate = float(params.get("rate", 1.0))
        fn, der = (lambda t: np.exp(rate * t) * H0), (lambda t: rate * np.exp(rate * t) * H0)
    elif family == "rotation-scaled":
        if dim != 2:
            raise ConfigurationError("семейство rotation-scaled определено только для m = 2", field="timedep.dim")
        d = np.diag(np.asarray(params.get("diag", (2.0, 1.0)), dtype=float))
        omega = float(params.get("omega", 1.0))
        beta = float(params.get("beta", 0.5))

        def rot(t):
            c, s = np.cos(omega * t), np.sin(omega * t)
            return np.array([[c, -s], [s, c]])

        def fn(t):
            r = rot(t)
            return (1 + beta * t) * r @ d @ r.T

        def der(t):
            r = rot(t)
            dr = omega * np.array([[-np.sin(omega * t), -np.cos(omega * t)],
                                   [np.cos(omega * t), -np.sin(omega * t)]])
            return beta * r @ d @ r.T + (1 + beta * t) * (dr @ d @ r.T + r @ d @ dr.T)
    elif family == "constant":
        H0 = _matrix_param(params.get("H0", 1.0), dim)
        fn, der = (lambda t: H0), (lambda t: np.zeros_like(H0))
    else:
        raise ConfigurationError(f"неизвестное семейство H(t) '{family}'", field="timedep.family")

    a_H, b_H = _bounds_on_horizon(fn, horizon)
    if a_H <= 0:
        raise ConfigurationError(f"H(t) семейства '{family}' теряет положительную определённость "
                                 f"на [{horizon[0]}, {horizon[1]}]", field="timedep.params")
    analytic = params.get("analytic_derivative", True)
    return ObliqueField(dim=dim, a_H=a_H, b_H=b_H, time_matrix=fn, derivative=der if analytic else None,
                        name=f"{family}")
