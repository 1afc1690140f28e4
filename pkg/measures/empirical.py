"""
Эмпирические вероятностные меры и точное расстояние Вассерштейна W₂.
"""
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from config import settings
from utils.errors import DomainError, UnsupportedInputError
from utils.utils import read_csv, write_csv


class EmpiricalMeasure:
    """Взвешенное облако точек: atoms (n, m), weights (n,), Σ weights = 1"""

    def __init__(self, atoms, weights: Optional[Sequence[float]] = None):
        atoms = np.asarray(atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        if atoms.ndim != 2 or len(atoms) < 1:
            raise DomainError("мера должна содержать хотя бы один атом", field="atoms")
        self.atoms = atoms
        if weights is None:
            self.weights = np.full(len(atoms), 1.0 / len(atoms))
            self.uniform = True
        else:
            weights = np.asarray(weights, dtype=float).ravel()
            if weights.shape != (len(atoms),):
                raise DomainError("число весов не совпадает с числом атомов", field="weights")
            if np.any(weights < 0):
                raise DomainError("веса должны быть неотрицательными", field="weights")
            if abs(weights.sum() - 1.0) > settings.tolerances.arithmetic:
                raise DomainError(f"сумма весов {weights.sum()!r} ≠ 1", field="weights")
            self.weights = weights
            self.uniform = bool(np.all(weights == weights[0]))

    @property
    def size(self) -> int:
        return len(self.atoms)

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def mean(self) -> np.ndarray:
        return self.weights @ self.atoms

    def covariance(self) -> np.ndarray:
        centered = self.atoms - self.mean()
        return (centered * self.weights[:, None]).T @ centered

    def second_moment(self) -> float:
        return float(self.weights @ np.sum(self.atoms ** 2, axis=1))

    def shift(self, c) -> "EmpiricalMeasure":
        return EmpiricalMeasure(self.atoms + np.asarray(c, dtype=float), None if self.uniform else self.weights)

    def pushforward(self, matrix) -> "EmpiricalMeasure":
        """Образ меры под линейным отображением x -> A x"""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        return EmpiricalMeasure(self.atoms @ matrix.T, None if self.uniform else self.weights)

    def to_csv(self, path: Union[str, Path]) -> Path:
        header = ["weight"] + [f"x_{i + 1}" for i in range(self.dim)]
        rows = ([float(w)] + [float(v) for v in atom] for w, atom in zip(self.weights, self.atoms))
        return write_csv(path, header, rows)

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "EmpiricalMeasure":
        _, rows = read_csv(path)
        data = np.array([[float(v) for v in row] for row in rows])
        return cls(data[:, 1:], data[:, 0])

    def __repr__(self):
        return f"EmpiricalMeasure(size={self.size}, dim={self.dim})"


def measure_to_csv(measure: EmpiricalMeasure, path: Union[str, Path]) -> Path:
    """CSV: weight, x_1..x_m"""
    return measure.to_csv(path)


def measure_from_csv(path: Union[str, Path]) -> EmpiricalMeasure:
    return EmpiricalMeasure.from_csv(path)


def dirac(x) -> EmpiricalMeasure:
    """Мера Дирака δ_x"""
    return EmpiricalMeasure(np.atleast_1d(np.asarray(x, dtype=float))[None, :])


def _w2_squared_1d(a: np.ndarray, wa: np.ndarray, b: np.ndarray, wb: np.ndarray) -> float:
    """W₂² на прямой через сопоставление квантилей (произвольные веса)"""
    ia, ib = np.argsort(a, kind="stable"), np.argsort(b, kind="stable")
    a, wa, b, wb = a[ia], wa[ia], b[ib], wb[ib]
    ca, cb = np.cumsum(wa), np.cumsum(wb)
    ca[-1] = cb[-1] = 1.0
    levels = np.union1d(ca, cb)
    lower = np.concatenate([[0.0], levels[:-1]])
    mass = levels - lower
    keep = mass > 0
    mids = 0.5 * (lower + levels)[keep]
    qa = a[np.minimum(np.searchsorted(ca, mids), len(a) - 1)]
    qb = b[np.minimum(np.searchsorted(cb, mids), len(b) - 1)]
    return float(np.sum(mass[keep] * (qa - qb) ** 2))


def assignment_cost(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Среднее квадратичное расстояние оптимального назначения (венгерский алгоритм)"""
    cost = cdist(mu.atoms, nu.atoms, metric="sqeuclidean")
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / mu.size)


def wasserstein2(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """
    Точное W₂(μ, ν):
    - 1D: сопоставление квантилей, веса произвольные;
    - многомерный случай: равные размеры и равномерные веса, оптимальное назначение.
    """
    if mu.dim != nu.dim:
        raise UnsupportedInputError(f"размерности мер различаются: {mu.dim} и {nu.dim}")
    if mu.size == 1 and nu.size == 1:
        return float(np.linalg.norm(mu.atoms[0] - nu.atoms[0]))
    if mu.dim == 1:
        return float(np.sqrt(max(_w2_squared_1d(mu.atoms[:, 0], mu.weights, nu.atoms[:, 0], nu.weights), 0.0)))
    if mu.size == 1 or nu.size == 1:
        # Единственная связка с дираком
        point, other = (mu, nu) if mu.size == 1 else (nu, mu)
        sq = np.sum((other.atoms - point.atoms[0]) ** 2, axis=1)
        return float(np.sqrt(other.weights @ sq))
    if mu.size != nu.size or not (mu.uniform and nu.uniform):
        raise UnsupportedInputError(
            "в размерности > 1 поддерживаются только меры с равным числом атомов и равномерными весами")
    return float(np.sqrt(max(assignment_cost(mu, nu), 0.0)))


def w2_to_origin(mu: EmpiricalMeasure) -> float:
    """W₂(μ, δ₀) = (∫|x|² μ(dx))^{1/2}"""
    return float(np.sqrt(mu.second_moment()))


def second_moment_sup(paths) -> float:
    """
    Оценка E[sup_r |x(r)|²]: среднее по частицам от поточечного супремума |x|².
    Принимает ансамбль траекторий (атрибут states), список ансамблей или массив (..., шаги, m).
    """
    if isinstance(paths, (list, tuple)) and paths and hasattr(paths[0], "states"):
        states = np.concatenate([p.states for p in paths])
    else:
        states = np.asarray(getattr(paths, "states", paths), dtype=float)
    if states.size == 0:
        raise DomainError("пустой ансамбль траекторий", field="paths")
    if states.ndim == 2:
        states = states[None]
    sq = np.sum(states ** 2, axis=-1)
    return float(np.mean(np.max(sq, axis=-1)))
