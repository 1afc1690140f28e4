"""
Записи траекторий: состояния x, отражение k, вариация ↕k↕ и плотность U (Δk = U·h)
для всех частиц одной репликации.
"""
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Union

import numpy as np

from convexcore import ConvexConstraint
from mvsolver.grid import TimeGrid
from utils.errors import ShapeError
from utils.utils import read_csv, write_csv


class ConstrainedPath:
    """Траектория одной частицы"""

    def __init__(self, times: np.ndarray, states: np.ndarray, k: np.ndarray, variation: np.ndarray,
                 density: Optional[np.ndarray] = None):
        self.times = times
        self.states = states
        self.k = k
        self.variation = variation
        self.density = density

    @property
    def dim(self) -> int:
        return self.states.shape[1]


class PathEnsemble:
    """
    Ансамбль частиц одной репликации.
    states, k - (N, S+1, m); variation - (N, S+1); increments - Δk (N, S, m);
    noise - ΔB (N, S, d); controls - управление на каждом шаге.
    scheme: "projected" (Δk ∈ N(x_{k+1})) или "penalized" (Δk = h∇Π_ε(x_k)).
    """

    def __init__(self, grid: TimeGrid, states: np.ndarray, increments: np.ndarray,
                 noise: Optional[np.ndarray] = None, controls: Optional[Sequence[Any]] = None,
                 scheme: str = "projected", eps: Optional[float] = None, replication: int = 0,
                 constraint: Optional[ConvexConstraint] = None):
        if states.shape[1] != grid.steps + 1 or increments.shape[1] != grid.steps:
            raise ShapeError(f"траектории ({states.shape[1]} узлов) не согласованы с сеткой {grid}",
                             field="paths")
        self.grid = grid
        self.states = states
        self.increments = increments
        self.noise = noise
        self.controls = list(controls) if controls is not None else [None] * grid.steps
        self.scheme = scheme
        self.eps = eps
        self.replication = replication
        self.constraint = constraint

        self.k = np.concatenate([np.zeros_like(states[:, :1]), np.cumsum(increments, axis=1)], axis=1)
        steps_variation = np.linalg.norm(increments, axis=2)
        self.variation = np.concatenate([np.zeros((len(states), 1)), np.cumsum(steps_variation, axis=1)], axis=1)

    @classmethod
    def constant(cls, x0, grid: TimeGrid, particles: int, **kwargs) -> "PathEnsemble":
        """Постоянный ансамбль x ≡ x₀ (нулевое приближение итерации)"""
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        states = np.broadcast_to(x0, (particles, grid.steps + 1, x0.size)).copy()
        return cls(grid, states, np.zeros((particles, grid.steps, x0.size)), **kwargs)

    @property
    def times(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def particles(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[2]

    @property
    def density(self) -> np.ndarray:
        """U_k = Δk_k / h"""
        return self.increments / self.grid.h

    def terminal(self) -> np.ndarray:
        return self.states[:, -1]

    def path(self, i: int) -> ConstrainedPath:
        return ConstrainedPath(self.times, self.states[i], self.k[i], self.variation[i], self.density[i])

    def __iter__(self):
        return (self.path(i) for i in range(self.particles))

    def contact_points(self) -> np.ndarray:
        """
        Точки, в субдифференциале которых лежит Δk_k: x_{k+1} для проекционной схемы,
        J_ε x_k для штрафной. Форма (N, S, m).
        """
        if self.scheme == "penalized" and self.constraint is not None:
            flat = self.states[:, :-1].reshape(-1, self.dim)
            return self.constraint.resolvent_points(flat, self.eps).reshape(self.increments.shape)
        return self.states[:, 1:]

    def rows(self) -> Iterable[list]:
        for i in range(self.particles):
            for j, t in enumerate(self.times):
                yield [self.replication, i, float(t), *map(float, self.states[i, j]), *map(float, self.k[i, j]),
                       float(self.variation[i, j])]

    def __repr__(self):
        return (f"PathEnsemble(scheme={self.scheme}, particles={self.particles}, steps={self.grid.steps}, "
                f"replication={self.replication})")


def stack_states(ensembles: Union[PathEnsemble, Sequence[PathEnsemble]]) -> np.ndarray:
    """Состояния всех репликаций: (R·N, S+1, m)"""
    if isinstance(ensembles, PathEnsemble):
        return ensembles.states
    return np.concatenate([e.states for e in ensembles])


def sup_distance_squared(first: Sequence[PathEnsemble], second: Sequence[PathEnsemble]) -> np.ndarray:
    """sup_t |x - x'|² по каждой частице каждой репликации"""
    a, b = stack_states(first), stack_states(second)
    if a.shape != b.shape:
        raise ShapeError(f"ансамбли разной формы: {a.shape} и {b.shape}", field="paths")
    return np.max(np.sum((a - b) ** 2, axis=2), axis=1)


def trajectory_header(dim: int) -> List[str]:
    return (["replication", "particle", "t"] + [f"x_{i + 1}" for i in range(dim)]
            + [f"k_{i + 1}" for i in range(dim)] + ["variation"])


def save_trajectories(ensembles: Sequence[PathEnsemble], path: Union[str, Path]) -> Path:
    """CSV: replication, particle, t, x_1..x_m, k_1..k_m, variation"""
    ensembles = [ensembles] if isinstance(ensembles, PathEnsemble) else list(ensembles)
    rows = (row for ensemble in ensembles for row in ensemble.rows())
    return write_csv(path, trajectory_header(ensembles[0].dim), rows)


def load_trajectories(path: Union[str, Path]) -> List[PathEnsemble]:
    """Обратное чтение CSV; ΔB и управления не сохраняются, Δk восстанавливается разностями k"""
    header, rows = read_csv(path)
    dim = sum(1 for name in header if name.startswith("x_"))
    data = np.array(rows, dtype=float)
    if data.size == 0:
        raise ShapeError("файл траекторий пуст", field=str(path))

    ensembles = []
    for replication in np.unique(data[:, 0]).astype(int):
        block = data[data[:, 0] == replication]
        particles = np.unique(block[:, 1]).astype(int)
        times = np.unique(block[:, 2])
        nodes = len(times)
        if len(block) != len(particles) * nodes:
            raise ShapeError(f"репликация {replication}: неполная таблица траекторий", field=str(path))
        block = block[np.lexsort((block[:, 2], block[:, 1]))]
        states = block[:, 3:3 + dim].reshape(len(particles), nodes, dim)
        k = block[:, 3 + dim:3 + 2 * dim].reshape(len(particles), nodes, dim)
        grid = TimeGrid(times[0], times[-1], nodes - 1)
        ensembles.append(PathEnsemble(grid, states, np.diff(k, axis=1), replication=int(replication)))
    return ensembles
