"""
Дискретная задача Скорохода с косым отражением:
    x + H Δk = y,  x ∈ K,  Δk ∈ N_K(x).
Эквивалентно: x - проекция y на K в метрике H⁻¹.

Полупространство - формула; брус - перебор активных множеств (m ≤ 8);
шар - уравнение на множитель ν (x - c = (I + νH)⁻¹(y - c)), решаемое методом Ньютона;
пересечение полупространств - Дейкстра в координатах w = H^{-1/2}x.
"""
import itertools
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.optimize import newton

from config import settings
from convexcore import Ball, Box, ConvexConstraint, HalfSpace, Polytope
from convexcore.geometry import dykstra_iterate
from dynamics.spectral import inverse_spd, jacobi_eigh, sqrt_spd
from logger_config import logger
from utils.errors import SkorohodStepError, UnsupportedGeometryError

# Больше координат - перебор 3^m активных множеств бруса заменяется итерацией Дейкстры
MAX_BOX_ENUMERATION = 8


def oblique_skorohod_step(constraint: ConvexConstraint, H, y) -> tuple[np.ndarray, np.ndarray]:
    """Один шаг для одной точки: (x, Δk). H проверяется на симметрию и положительную определённость."""
    constraint.require_indicator("oblique_skorohod_step")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))
    inverse_spd(H)
    x, dk = skorohod_points(constraint, H, y[None])
    return x[0], dk[0]


def skorohod_points(constraint: ConvexConstraint, H: np.ndarray, y: np.ndarray,
                    step: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """
    Пачка задач: y (N, m), H (m, m) общая или (N, m, m) своя для каждой строки.
    Решаются только строки вне множества; остальные x = y, Δk = 0.
    """
    geometry = constraint.geometry
    y = np.asarray(y, dtype=float)
    H = np.broadcast_to(np.asarray(H, dtype=float), (len(y),) + (y.shape[1], y.shape[1]))
    x = y.copy()
    dk = np.zeros_like(y)

    outside = geometry._depth(y) < 0
    if not np.any(outside):
        return x, dk
    ys, Hs = y[outside], np.ascontiguousarray(H[outside])

    if isinstance(geometry, HalfSpace):
        xs, dks = _half_space(geometry, Hs, ys)
    elif isinstance(geometry, Box) and geometry.dim <= MAX_BOX_ENUMERATION:
        xs, dks = _box(geometry, Hs, ys, step)
    elif isinstance(geometry, Box):
        finite_lo = np.isfinite(geometry.lower)
        finite_hi = np.isfinite(geometry.upper)
        eye = np.eye(geometry.dim)
        A = np.vstack([-eye[finite_lo], eye[finite_hi]])
        c = np.concatenate([-geometry.lower[finite_lo], geometry.upper[finite_hi]])
        xs, dks = _whitened_dykstra(A, c, Hs, ys, step)
    elif isinstance(geometry, Ball):
        xs, dks = _ball(geometry, Hs, ys, step)
    elif isinstance(geometry, Polytope):
        xs, dks = _whitened_dykstra(geometry.A, geometry.c, Hs, ys, step)
    else:
        raise UnsupportedGeometryError(f"шаг Скорохода не реализован для '{geometry.describe()}'", field="geometry")

    x[outside] = xs
    dk[outside] = dks
    return x, dk


def _half_space(geometry: HalfSpace, H: np.ndarray, y: np.ndarray):
    # Δk = λn, λ = (⟨n, y⟩ - c)/⟨n, Hn⟩
    n = geometry.normal
    Hn = H @ n
    lam = np.maximum(y @ n - geometry.offset, 0.0) / (Hn @ n)
    return y - lam[:, None] * Hn, lam[:, None] * n


@lru_cache(maxsize=None)
def _active_sets(m: int) -> tuple:
    """Все знаковые шаблоны (-1 нижняя граница, 0 свободна, +1 верхняя) по возрастанию числа активных"""
    patterns = sorted(itertools.product((0, -1, 1), repeat=m), key=lambda p: sum(1 for s in p if s))
    return tuple(np.array(p) for p in patterns)


def _box(geometry: Box, H: np.ndarray, y: np.ndarray, step):
    """
    Перебор активных множеств B: Δk_F = 0, Δk_B = H_BB⁻¹(y_B - b), x_F = y_F - H_FB Δk_B.
    Допустимо, если x_F в границах, Δk ≤ 0 на нижних и ≥ 0 на верхних гранях.
    """
    tol = settings.tolerances.geometric
    m = geometry.dim
    x = np.full_like(y, np.nan)
    dk = np.zeros_like(y)
    pending = np.ones(len(y), dtype=bool)

    for pattern in _active_sets(m):
        if not np.any(pending):
            break
        active = pattern != 0
        target = np.where(pattern < 0, geometry.lower, geometry.upper)
        if not np.all(np.isfinite(target[active])):
            continue
        rows = np.flatnonzero(pending)
        yr, Hr = y[rows], H[rows]
        dk_r = np.zeros_like(yr)
        if np.any(active):
            H_BB = Hr[:, active][:, :, active]
            rhs = yr[:, active] - target[active]
            dk_r[:, active] = np.linalg.solve(H_BB, rhs[:, :, None])[:, :, 0]
        x_r = yr - np.einsum("nij,nj->ni", Hr, dk_r)
        x_r[:, active] = target[active]

        free = ~active
        scale = tol * (1.0 + np.abs(yr))
        inside = np.all((x_r[:, free] >= geometry.lower[free] - scale[:, free]) &
                        (x_r[:, free] <= geometry.upper[free] + scale[:, free]), axis=1)
        signs = np.all(dk_r[:, active] * pattern[active] >= -tol * (1.0 + np.abs(dk_r[:, active])), axis=1)
        ok = inside & signs
        hit = rows[ok]
        x[hit] = np.clip(x_r[ok], geometry.lower, geometry.upper)
        dk[hit] = dk_r[ok]
        pending[hit] = False

    if np.any(pending):
        raise SkorohodStepError("брус: ни одно активное множество не удовлетворяет условиям",
                                residual=float("inf"), step=step)
    return x, dk


def _ball(geometry: Ball, H: np.ndarray, y: np.ndarray, step):
    """
    Δk = ν(x - c), x - c = V diag(1/(1 + νλ)) Vᵀ(y - c); ν из |x - c| = r.
    Функция ν ↦ |x(ν) - c| выпукла и убывает, поэтому Ньютон из ν = 0 монотонно сходится к корню.
    """
    w, V = jacobi_eigh(H)
    z = np.einsum("nji,nj->ni", V, y - geometry.center)
    r = geometry.radius

    def norm(nu):
        return np.sqrt(np.sum((z / (1.0 + nu[:, None] * w)) ** 2, axis=1))

    def func(nu):
        return norm(nu) - r

    def fprime(nu):
        scaled = z / (1.0 + nu[:, None] * w)
        return -np.sum(w * scaled ** 2 / (1.0 + nu[:, None] * w), axis=1) / norm(nu)

    options = dict(tol=1e-15, rtol=1e-14, maxiter=settings.iteration.skorohod_iterations,
                   full_output=True, disp=False)
    if len(y) == 1:
        # Для одной точки scipy идёт по скалярной ветке с другим форматом результата
        root, info = newton(lambda v: func(np.atleast_1d(v))[0], 0.0,
                            fprime=lambda v: fprime(np.atleast_1d(v))[0], **options)
        nu, converged = np.array([float(root)]), np.array([info.converged])
    else:
        nu, converged, _ = newton(func, np.zeros(len(y)), fprime=fprime, **options)
        nu = np.asarray(nu)
    residual = np.abs(func(nu))
    if not np.all(converged) and residual.max() > settings.tolerances.geometric * max(r, 1.0):
        raise SkorohodStepError("шар: метод Ньютона для множителя не сошёлся", residual=float(residual.max()),
                                step=step)
    shifted = np.einsum("nij,nj->ni", V, z / (1.0 + nu[:, None] * w))
    return geometry.center + shifted, nu[:, None] * shifted


def _whitened_dykstra(A: np.ndarray, c: np.ndarray, H: np.ndarray, y: np.ndarray, step):
    """
    В координатах w = S⁻¹x (S = H^{1/2}) задача - евклидова проекция S⁻¹y на {w : (A S) w ≤ c}.
    Нормали S n_k нормируются; Δk = H⁻¹(y - x).
    """
    S = sqrt_spd(H)
    S_inv = inverse_spd(S)
    normals = np.einsum("nij,kj->nki", S, A)
    lengths = np.linalg.norm(normals, axis=2)
    normals = normals / lengths[:, :, None]
    offsets = c[None, :] / lengths

    w0 = np.einsum("nij,nj->ni", S_inv, y)
    w, change, violation = dykstra_iterate(w0, normals, offsets)
    if change > settings.tolerances.geometric:
        if violation > settings.tolerances.composite:
            raise SkorohodStepError("пересечение полупространств: итерация Дейкстры не сошлась",
                                    residual=violation, step=step)
        logger.debug(f"🔹 Дейкстра в косой метрике остановлена по числу проходов, сдвиг {change:.3e}")
    x = np.einsum("nij,nj->ni", S, w)
    dk = np.einsum("nij,nj->ni", S_inv, w0 - w)
    return x, dk
