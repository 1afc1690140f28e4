"""
Аппроксимация Моро-Иосиды:
    Π_ε(x) = inf_z { |z - x|²/(2ε) + Π(z) },  J_ε x = x - ε∇Π_ε(x).
"""
from typing import Optional

import numpy as np

from convexcore.constraint import ConvexConstraint
from convexcore.geometry import _as_points, _restore
from utils.errors import DomainError


def _check_eps(eps: float):
    if not eps > 0:
        raise DomainError(f"ε должно быть положительным, получено {eps}", field="epsilon")


def project(constraint: ConvexConstraint, x) -> np.ndarray:
    """Метрическая проекция на множество (только индикаторы)"""
    constraint.require_indicator("project")
    return constraint.geometry.project(x)


def resolvent(constraint: ConvexConstraint, eps: float, x) -> np.ndarray:
    """J_ε x; для индикатора совпадает с проекцией"""
    _check_eps(eps)
    pts, single = _as_points(x)
    return _restore(constraint.resolvent_points(pts, eps), single)


def yosida_gradient(constraint: ConvexConstraint, eps: float, x) -> np.ndarray:
    """∇Π_ε(x) = (x - J_ε x)/ε"""
    _check_eps(eps)
    pts, single = _as_points(x)
    return _restore((pts - constraint.resolvent_points(pts, eps)) / eps, single)


def yosida_value(constraint: ConvexConstraint, eps: float, x) -> np.ndarray:
    """Π_ε(x) = |x - J_ε x|²/(2ε) + Π(J_ε x)"""
    _check_eps(eps)
    pts, single = _as_points(x)
    j = constraint.resolvent_points(pts, eps)
    value = np.sum((pts - j) ** 2, axis=1) / (2 * eps)
    if constraint.smooth is not None:
        value = value + constraint.smooth.value(j)
    return _restore(value, single)


def yosida_all(constraint: ConvexConstraint, eps: float, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Π_ε, ∇Π_ε, J_ε) для пачки точек за одно вычисление резольвенты"""
    _check_eps(eps)
    j = constraint.resolvent_points(pts, eps)
    grad = (pts - j) / eps
    value = np.sum((pts - j) ** 2, axis=1) / (2 * eps)
    if constraint.smooth is not None:
        value = value + constraint.smooth.value(j)
    return value, grad, j


def yosida_value_grid(constraint: ConvexConstraint, eps: float, x, lower: float = -3.0, upper: float = 3.0,
                      step: float = 1e-4, max_nodes: Optional[int] = 4_000_000) -> float:
    """
    Перебор инфимума по равномерной сетке z (1D или 2D) - независимая проверка yosida_value.
    Для 2D шаг увеличивается, если узлов больше max_nodes.
    """
    _check_eps(eps)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size > 2:
        raise DomainError("перебор по сетке поддерживается только в размерности 1 и 2", field="x")
    count = int(round((upper - lower) / step)) + 1
    if x.size == 2 and max_nodes is not None and count * count > max_nodes:
        count = int(np.sqrt(max_nodes))
    axis = np.linspace(lower, upper, count)
    if x.size == 1:
        z = axis[:, None]
    else:
        gx, gy = np.meshgrid(axis, axis, indexing="ij")
        z = np.stack([gx.ravel(), gy.ravel()], axis=1)
    values = np.sum((z - x) ** 2, axis=1) / (2 * eps) + constraint.value(z)
    return float(np.min(values))
