"""
Геометрии выпуклых множеств: полупространство, брус, шар, пересечение полупространств.

Все множества обязаны содержать начало координат (Π(0) = 0, 0 ∈ D(∂Π)).
Методы принимают одну точку формы (m,) или пачку точек формы (N, m).
"""
from typing import Optional, Sequence

import numpy as np

from config import settings
from logger_config import logger
from utils.errors import ConfigurationError, InfeasibleSetError, UnsupportedGeometryError


def _as_points(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    return np.atleast_2d(arr), single


def _restore(arr: np.ndarray, single: bool) -> np.ndarray:
    return arr[0] if single else arr


class Geometry:
    """Базовый класс геометрии выпуклого замкнутого множества"""
    name = "geometry"
    # Проекция задаётся формулой (без итераций)
    closed_form = True

    def __init__(self, dim: int):
        self.dim = dim

    def project(self, x) -> np.ndarray:
        pts, single = _as_points(x)
        self._check_dim(pts)
        return _restore(self._project(pts), single)

    def distance(self, x) -> np.ndarray:
        """Расстояние до множества"""
        pts, single = _as_points(x)
        d = np.linalg.norm(pts - self._project(pts), axis=1)
        return d[0] if single else d

    def depth(self, x) -> np.ndarray:
        """Расстояние до дополнения множества (0 на границе и снаружи)"""
        pts, single = _as_points(x)
        d = np.maximum(self._depth(pts), 0.0)
        return d[0] if single else d

    def contains(self, x, tol: Optional[float] = None) -> np.ndarray:
        tol = settings.tolerances.geometric if tol is None else tol
        return self.distance(x) <= tol

    def corners(self) -> np.ndarray:
        """Характерные точки множества для зондирования (вершины, точки границы)"""
        return np.zeros((1, self.dim))

    def sample(self, rng: np.random.Generator, count: int, scale: float = 2.0) -> np.ndarray:
        """Точки множества: проекции равномерной выборки из куба [-scale, scale]^m плюс характерные точки"""
        raw = rng.uniform(-scale, scale, size=(count, self.dim))
        pts = self._project(raw)
        extra = self.corners()
        extra = extra[np.all(np.isfinite(extra), axis=1)]
        if len(extra):
            extra = extra[self.contains(extra)]
        return np.vstack([pts, extra]) if len(extra) else pts

    def describe(self) -> str:
        return self.name

    def _check_dim(self, pts: np.ndarray):
        if pts.shape[1] != self.dim:
            raise ConfigurationError(f"размерность точки {pts.shape[1]} не совпадает с размерностью множества {self.dim}")

    def _project(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _depth(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class HalfSpace(Geometry):
    """Полупространство {x : ⟨n, x⟩ ≤ c}, n - внешняя нормаль, c ≥ 0"""
    name = "half-space"

    def __init__(self, normal: Sequence[float], offset: float = 0.0):
        normal = np.asarray(normal, dtype=float).ravel()
        norm = np.linalg.norm(normal)
        if norm == 0.0:
            raise ConfigurationError("нормаль полупространства нулевая", field="normal")
        if offset < 0:
            raise ConfigurationError(f"полупространство не содержит 0 (offset={offset} < 0)", field="offset")
        super().__init__(normal.size)
        # Храним единичную нормаль
        self.normal = normal / norm
        self.offset = float(offset) / norm

    def _project(self, pts):
        excess = np.maximum(pts @ self.normal - self.offset, 0.0)
        return pts - excess[:, None] * self.normal

    def _depth(self, pts):
        return self.offset - pts @ self.normal

    def corners(self):
        return (self.offset * self.normal)[None, :]

    def describe(self):
        return f"half-space ⟨n,x⟩ ≤ c, n={self.normal.tolist()}, c={self.offset}"


class Box(Geometry):
    """Брус lower ≤ x ≤ upper (границы могут быть бесконечными), lower ≤ 0 ≤ upper"""
    name = "box"

    def __init__(self, lower: Sequence[float], upper: Sequence[float]):
        lower = np.asarray(lower, dtype=float).ravel()
        upper = np.asarray(upper, dtype=float).ravel()
        if lower.shape != upper.shape:
            raise ConfigurationError("lower и upper разной длины", field="lower")
        if np.any(lower > 0) or np.any(upper < 0):
            raise ConfigurationError("брус не содержит 0", field="lower/upper")
        super().__init__(lower.size)
        self.lower = lower
        self.upper = upper

    def _project(self, pts):
        return np.clip(pts, self.lower, self.upper)

    def _depth(self, pts):
        return np.minimum(pts - self.lower, self.upper - pts).min(axis=1)

    def corners(self):
        grids = [np.unique([lo, hi]) for lo, hi in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*grids, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    def describe(self):
        return f"box [{self.lower.tolist()}, {self.upper.tolist()}]"


class Ball(Geometry):
    """Замкнутый шар B̄(center, radius), |center| ≤ radius"""
    name = "ball"

    def __init__(self, center: Sequence[float], radius: float):
        center = np.asarray(center, dtype=float).ravel()
        if radius <= 0:
            raise ConfigurationError(f"радиус должен быть положительным, получено {radius}", field="radius")
        if np.linalg.norm(center) > radius:
            raise ConfigurationError("шар не содержит 0", field="center")
        super().__init__(center.size)
        self.center = center
        self.radius = float(radius)

    def _project(self, pts):
        shifted = pts - self.center
        norms = np.linalg.norm(shifted, axis=1)
        scale = np.where(norms > self.radius, self.radius / np.where(norms > 0, norms, 1.0), 1.0)
        return self.center + shifted * scale[:, None]

    def _depth(self, pts):
        return self.radius - np.linalg.norm(pts - self.center, axis=1)

    def corners(self):
        eye = np.eye(self.dim)
        return np.vstack([self.center + self.radius * eye, self.center - self.radius * eye])

    def describe(self):
        return f"ball center={self.center.tolist()}, r={self.radius}"


class Polytope(Geometry):
    """
    Пересечение полупространств {x : A x ≤ c}.
    Проекция - итерация Дейкстры по чередующимся проекциям.
    """
    name = "intersection"
    closed_form = False

    def __init__(self, normals: Sequence[Sequence[float]], offsets: Sequence[float]):
        halves = [HalfSpace(n, c) for n, c in zip(normals, offsets)]
        if not halves:
            raise ConfigurationError("пустой список полупространств", field="half_spaces")
        dims = {h.dim for h in halves}
        if len(dims) != 1:
            raise ConfigurationError("полупространства разной размерности", field="half_spaces")
        super().__init__(dims.pop())
        self.halves = halves
        self.A = np.stack([h.normal for h in halves])
        self.c = np.array([h.offset for h in halves])
        self.last_sweeps = 0

    def _project(self, pts):
        return dykstra(pts, self.A, self.c)

    def _depth(self, pts):
        return (self.c[None, :] - pts @ self.A.T).min(axis=1)

    def corners(self):
        # c_k·a_k лежит на k-й грани, но может нарушать остальные
        return self._project(self.c[:, None] * self.A)

    def describe(self):
        return f"intersection of {len(self.halves)} half-spaces"


def dykstra(pts: np.ndarray, A: np.ndarray, c: np.ndarray,
            tol: Optional[float] = None, max_sweeps: Optional[int] = None) -> np.ndarray:
    """
    Проекция на {x : A x ≤ c} итерацией Дейкстры (все строки pts обрабатываются одновременно).
    Нормали единичные; A формы (K, m) общая для всех строк или (N, K, m) своя для каждой строки.
    Останов: |x_{k+1} - x_k| ≤ tol или max_sweeps проходов.
    """
    x, change, violation = dykstra_iterate(pts, A, c, tol, max_sweeps)
    tol = settings.tolerances.geometric if tol is None else tol
    if change > tol:
        if violation > settings.tolerances.composite:
            raise InfeasibleSetError(
                f"Дейкстра не сошлась, нарушение ограничений {violation:.3e}")
        logger.warning(f"⚠️ Дейкстра: проходы исчерпаны, последний сдвиг {change:.3e}")
    return x


def dykstra_iterate(pts: np.ndarray, A: np.ndarray, c: np.ndarray,
                    tol: Optional[float] = None, max_sweeps: Optional[int] = None) -> tuple[np.ndarray, float, float]:
    """Итерации Дейкстры без решения об ошибке: (x, последний сдвиг, нарушение ограничений)"""
    tol = settings.tolerances.geometric if tol is None else tol
    max_sweeps = settings.iteration.dykstra_sweeps if max_sweeps is None else max_sweeps

    x = np.array(pts, dtype=float, copy=True)
    n_rows = len(x)
    A_rows = np.broadcast_to(A, (n_rows,) + A.shape[-2:])
    c_rows = np.broadcast_to(c, (n_rows, A.shape[-2]))
    increments = np.zeros((A_rows.shape[1],) + x.shape)
    change = 0.0
    for sweep in range(1, max_sweeps + 1):
        previous = x.copy()
        for k in range(A_rows.shape[1]):
            y = x + increments[k]
            excess = np.maximum(np.einsum("nm,nm->n", y, A_rows[:, k, :]) - c_rows[:, k], 0.0)
            x = y - excess[:, None] * A_rows[:, k, :]
            increments[k] = y - x
        change = float(np.max(np.linalg.norm(x - previous, axis=1))) if n_rows else 0.0
        if change <= tol:
            break

    violation = float(np.max(np.einsum("nm,nkm->nk", x, A_rows) - c_rows)) if n_rows else 0.0
    return x, change, violation


GEOMETRIES = {
    "half-space": HalfSpace,
    "box": Box,
    "ball": Ball,
    "intersection": Polytope,
}


def make_geometry(kind: str, **params) -> Geometry:
    """Фабрика геометрий по имени из конфигурации эксперимента"""
    try:
        cls = GEOMETRIES[kind]
    except KeyError:
        raise UnsupportedGeometryError(
            f"неизвестная геометрия '{kind}', доступны: {sorted(GEOMETRIES)}", field="geometry")
    if cls is Polytope:
        return Polytope(params["normals"], params["offsets"])
    return cls(**params)
