from typing import Optional, Sequence

import numpy as np

from convexcore import ConvexConstraint
from dynamics.fields import CoefficientField, ObliqueField
from utils.errors import ConfigurationError


class MVSystem:
    """
    Уравнение среднего поля с косым субградиентом:
        dx + H(x, μ) ∂Π(x) dt ∋ f(x, μ) dt + g(x, μ) dB,  x(t₀) = x₀,  μ_{t₀} = δ_{x₀}.
    """

    def __init__(self, constraint: ConvexConstraint, coefficients: CoefficientField, oblique: ObliqueField,
                 x0: Sequence[float], name: str = "custom", description: str = "",
                 notes: Optional[Sequence[str]] = None):
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        dims = {constraint.dim, coefficients.dim, oblique.dim, x0.size}
        if len(dims) != 1:
            raise ConfigurationError(
                f"размерности не согласованы: Π={constraint.dim}, f={coefficients.dim}, H={oblique.dim}, "
                f"x₀={x0.size}", field="system")
        self.constraint = constraint
        self.coefficients = coefficients
        self.oblique = oblique
        self.x0 = x0
        self.name = name
        self.description = description
        self.notes = list(notes or [])

    @property
    def dim(self) -> int:
        return self.x0.size

    @property
    def noise_dim(self) -> int:
        return self.coefficients.noise_dim

    @property
    def x0_feasible(self) -> bool:
        """x₀ ∈ D(∂Π); штрафная схема допускает старт вне множества, проекционная - нет"""
        return bool(self.constraint.in_domain(self.x0))

    def require_feasible_start(self):
        if not self.x0_feasible:
            raise ConfigurationError(f"x₀ = {self.x0.tolist()} вне множества ограничений", field="x0")

    def with_initial(self, x0: Sequence[float]) -> "MVSystem":
        return MVSystem(self.constraint, self.coefficients, self.oblique, x0, self.name, self.description, self.notes)

    def with_constraint(self, constraint: ConvexConstraint) -> "MVSystem":
        return MVSystem(constraint, self.coefficients, self.oblique, self.x0, self.name, self.description, self.notes)

    def describe(self) -> str:
        lines = [
            f"Система: {self.name}",
            f"  {self.description}" if self.description else "",
            f"  Ограничение: {self.constraint.describe()}",
            f"  Коэффициенты: {self.coefficients.name}, L = {self.coefficients.lipschitz:g}, "
            f"m = {self.dim}, d = {self.noise_dim}",
            f"  Косая матрица: {self.oblique.name}, a_H = {self.oblique.a_H:g}, b_H = {self.oblique.b_H:g}",
            f"  x₀ = {self.x0.tolist()}",
        ]
        lines += [f"  - {note}" for note in self.notes]
        return "\n".join(line for line in lines if line)
