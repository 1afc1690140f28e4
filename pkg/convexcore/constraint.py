"""
Выпуклая функция Π: индикатор множества, гладкая выпуклая функция или их сумма.
Хранит Π, D(∂Π) и умеет считать резольвенту J_ε.
"""
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from config import settings
from convexcore.geometry import Geometry, _as_points, _restore
from logger_config import logger
from utils.errors import ConfigurationError, UnsupportedGeometryError

ArrayFn = Callable[[np.ndarray], np.ndarray]


class SmoothConvex:
    """
    Гладкая выпуклая функция, заданная значением и градиентом.
    value/gradient принимают пачку точек (N, m) и возвращают (N,) и (N, m).
    prox (если есть) - явная резольвента (N, m), ε -> (N, m).
    """

    def __init__(self, value: ArrayFn, gradient: ArrayFn, dim: int,
                 prox: Optional[Callable[[np.ndarray, float], np.ndarray]] = None,
                 lipschitz: Optional[float] = None, name: str = "smooth"):
        self.dim = dim
        self.name = name
        self.lipschitz = lipschitz
        self._value = value
        self._gradient = gradient
        self._prox = prox

        origin = np.zeros((1, dim))
        # Сдвиг, обеспечивающий Π(0) = 0
        self.shift = float(np.asarray(value(origin)).ravel()[0])
        grad0 = np.asarray(gradient(origin)).ravel()
        if np.linalg.norm(grad0) > settings.tolerances.geometric:
            raise ConfigurationError(
                f"гладкая функция '{name}' не минимальна в 0: |∇Π(0)| = {np.linalg.norm(grad0):.3e}",
                field="smooth")

    @property
    def closed_form(self) -> bool:
        return self._prox is not None

    def value(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(self._value(pts), dtype=float).reshape(len(pts)) - self.shift

    def gradient(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(self._gradient(pts), dtype=float).reshape(pts.shape)

    def prox(self, pts: np.ndarray, eps: float) -> np.ndarray:
        """argmin_z |z - x|²/(2ε) + φ(z)"""
        if self._prox is not None:
            return np.asarray(self._prox(pts, eps), dtype=float).reshape(pts.shape)
        out = np.empty_like(pts)
        for i, x in enumerate(pts):
            def objective(z, x=x):
                z2 = z[None, :]
                diff = z - x
                val = diff @ diff / (2 * eps) + self.value(z2)[0]
                return val, diff / eps + self.gradient(z2)[0]

            res = minimize(objective, x, jac=True, method="L-BFGS-B",
                           options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 1000})
            out[i] = res.x
        return out


def quadratic(Q) -> SmoothConvex:
    """Π(x) = ½ xᵀQx, Q симметричная неотрицательно определённая; резольвента (I + εQ)^{-1}x"""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if not np.allclose(Q, Q.T, atol=settings.tolerances.geometric):
        raise ConfigurationError("матрица квадратичной функции несимметрична", field="Q")
    eig = np.linalg.eigvalsh(Q)
    if eig.min() < -settings.tolerances.geometric:
        raise ConfigurationError(f"квадратичная функция невыпукла (λ_min={eig.min():.3e})", field="Q")
    dim = Q.shape[0]

    def prox(pts, eps):
        return np.linalg.solve(np.eye(dim) + eps * Q, pts.T).T

    return SmoothConvex(
        value=lambda p: 0.5 * np.einsum("ni,ij,nj->n", p, Q, p),
        gradient=lambda p: p @ Q.T,
        dim=dim, prox=prox, lipschitz=float(max(eig.max(), 0.0)), name="quadratic",
    )


class ConvexConstraint:
    """
    Собственная п.н.с. выпуклая функция Π с Π(x) ≥ Π(0) = 0.

    kind:
        indicator - индикатор множества (D(∂Π) = множество)
        smooth    - гладкая выпуклая функция (D(∂Π) = ℝ^m)
        sum       - индикатор плюс гладкая функция
    """
    KINDS = ("indicator", "smooth", "sum")

    def __init__(self, kind: str, geometry: Optional[Geometry] = None, smooth: Optional[SmoothConvex] = None):
        if kind not in self.KINDS:
            raise ConfigurationError(f"неизвестный тип ограничения '{kind}'", field="kind")
        if kind in ("indicator", "sum") and geometry is None:
            raise ConfigurationError(f"для типа '{kind}' нужна геометрия", field="geometry")
        if kind in ("smooth", "sum") and smooth is None:
            raise ConfigurationError(f"для типа '{kind}' нужна гладкая часть", field="smooth")
        if kind == "sum" and smooth.lipschitz is None:
            raise ConfigurationError("для суммы нужна константа Липшица градиента гладкой части", field="smooth")
        if geometry is not None and smooth is not None and geometry.dim != smooth.dim:
            raise ConfigurationError("размерности геометрии и гладкой части различаются", field="smooth")
        self.kind = kind
        self.geometry = geometry
        self.smooth = smooth
        self.dim = geometry.dim if geometry is not None else smooth.dim

    # Фабрики
    @classmethod
    def indicator(cls, geometry: Geometry) -> "ConvexConstraint":
        return cls("indicator", geometry=geometry)

    @classmethod
    def smooth_convex(cls, smooth: SmoothConvex) -> "ConvexConstraint":
        return cls("smooth", smooth=smooth)

    @classmethod
    def sum_of(cls, geometry: Geometry, smooth: SmoothConvex) -> "ConvexConstraint":
        return cls("sum", geometry=geometry, smooth=smooth)

    @property
    def is_indicator(self) -> bool:
        return self.kind == "indicator"

    @property
    def closed_form(self) -> bool:
        """Резольвента считается без итераций"""
        if self.kind == "indicator":
            return self.geometry.closed_form
        if self.kind == "smooth":
            return self.smooth.closed_form
        return False

    def require_indicator(self, operation: str):
        if self.kind != "indicator":
            raise UnsupportedGeometryError(f"операция '{operation}' определена только для индикаторов множеств",
                                           field="kind")

    def value(self, x) -> np.ndarray:
        """Π(x); +∞ вне D(Π) для индикаторной части"""
        pts, single = _as_points(x)
        out = np.zeros(len(pts))
        if self.geometry is not None:
            outside = self.geometry.distance(pts) > settings.tolerances.geometric
            out = np.where(outside, np.inf, out)
        if self.smooth is not None:
            out = out + self.smooth.value(pts)
        return _restore(out, single)

    def in_domain(self, x, tol: Optional[float] = None) -> np.ndarray:
        """Принадлежность D(∂Π)"""
        if self.geometry is None:
            pts, single = _as_points(x)
            ok = np.ones(len(pts), dtype=bool)
            return ok[0] if single else ok
        return self.geometry.contains(x, tol)

    def domain_distance(self, x) -> np.ndarray:
        """dist(x, D(∂Π))"""
        if self.geometry is None:
            pts, single = _as_points(x)
            d = np.zeros(len(pts))
            return d[0] if single else d
        return self.geometry.distance(x)

    def resolvent_points(self, pts: np.ndarray, eps: float) -> np.ndarray:
        """J_ε для пачки точек (N, m)"""
        if self.kind == "indicator":
            return self.geometry._project(pts)
        if self.kind == "smooth":
            return self.smooth.prox(pts, eps)
        return self._sum_prox(pts, eps)

    def _sum_prox(self, pts: np.ndarray, eps: float) -> np.ndarray:
        """Резольвента суммы индикатора и гладкой функции: ускоренный проекционный градиент"""
        step = 1.0 / (1.0 / eps + self.smooth.lipschitz)
        z = self.geometry._project(pts)
        w, t = z.copy(), 1.0
        tol = settings.tolerances.arithmetic
        for it in range(settings.iteration.dykstra_sweeps):
            grad = (w - pts) / eps + self.smooth.gradient(w)
            z_next = self.geometry._project(w - step * grad)
            t_next = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
            w = z_next + ((t - 1) / t_next) * (z_next - z)
            change = np.max(np.abs(z_next - z)) if len(z) else 0.0
            z, t = z_next, t_next
            if change <= tol:
                break
        else:
            logger.warning(f"⚠️ Резольвента суммы: итерации исчерпаны, сдвиг {change:.3e}")
        return z

    def describe(self) -> str:
        parts = []
        if self.geometry is not None:
            parts.append(f"indicator of {self.geometry.describe()}")
        if self.smooth is not None:
            parts.append(f"smooth '{self.smooth.name}'")
        return " + ".join(parts)
