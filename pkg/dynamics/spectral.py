"""
Спектральные операции для симметричных положительно определённых матриц:
циклический метод Якоби, корень H^{1/2}, обратная H^{-1}.
Все функции принимают одну матрицу (m, m) или пачку (B, m, m).
"""
from typing import Optional

import numpy as np

from config import settings
from utils.errors import ShapeError, SpectralError


def _as_batch(A) -> tuple[np.ndarray, bool]:
    A = np.asarray(A, dtype=float)
    single = A.ndim == 2
    A = A[None] if single else A
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ShapeError(f"ожидалась квадратная матрица, получена форма {A.shape}")
    return A, single


def symmetry_residual(A) -> np.ndarray:
    """max |A - Aᵀ| по элементам (для пачки - по каждой матрице)"""
    batch, single = _as_batch(A)
    res = np.abs(batch - np.swapaxes(batch, 1, 2)).max(axis=(1, 2))
    return res[0] if single else res


def jacobi_eigh(A, tol: Optional[float] = None, max_sweeps: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """
    Циклический метод Якоби для симметричных матриц.
    Порядок вращений фиксирован (p < q построчно), поэтому результат воспроизводим.
    Возвращает (собственные значения (B, m), собственные векторы по столбцам (B, m, m)).
    """
    batch, single = _as_batch(A)
    max_sweeps = settings.iteration.jacobi_sweeps if max_sweeps is None else max_sweeps

    a = batch.copy()
    n_batch, m, _ = a.shape
    # Вращаем до машинной точности: обратная матрица при числе обусловленности 1e6 иначе теряет точность
    tol = np.finfo(float).eps * max(m, 1) if tol is None else tol
    v = np.broadcast_to(np.eye(m), a.shape).copy()
    scale = np.maximum(np.sqrt(np.sum(a ** 2, axis=(1, 2))), np.finfo(float).tiny)

    for sweep in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2, axis=(1, 2)))
        if np.all(off <= tol * scale):
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                app, aqq, apq = a[:, p, p], a[:, q, q], a[:, p, q]
                active = apq != 0.0
                phi = np.where(active, 0.5 * np.arctan2(2 * apq, aqq - app), 0.0)
                c, s = np.cos(phi)[:, None], np.sin(phi)[:, None]

                # Вращение столбцов, затем строк: A <- Jᵀ A J
                cp, cq = a[:, :, p].copy(), a[:, :, q].copy()
                a[:, :, p] = c * cp - s * cq
                a[:, :, q] = s * cp + c * cq
                rp, rq = a[:, p, :].copy(), a[:, q, :].copy()
                a[:, p, :] = c * rp - s * rq
                a[:, q, :] = s * rp + c * rq
                a[:, p, q] = 0.0
                a[:, q, p] = 0.0

                vp, vq = v[:, :, p].copy(), v[:, :, q].copy()
                v[:, :, p] = c * vp - s * vq
                v[:, :, q] = s * vp + c * vq

    eigenvalues = np.diagonal(a, axis1=1, axis2=2).copy()
    if single:
        return eigenvalues[0], v[0]
    return eigenvalues, v


def _spd_eigen(A, operation: str) -> tuple[np.ndarray, np.ndarray, bool]:
    batch, single = _as_batch(A)
    asym = symmetry_residual(batch)
    limit = settings.tolerances.geometric * np.maximum(np.abs(batch).max(axis=(1, 2)), 1.0)
    if np.any(asym > limit):
        worst = float(asym.max())
        raise SpectralError(f"{operation}: матрица несимметрична (|A - Aᵀ| = {worst:.3e})")
    sym = 0.5 * (batch + np.swapaxes(batch, 1, 2))
    w, v = jacobi_eigh(sym)
    w_min = w.min(axis=1)
    w_max = np.abs(w).max(axis=1)
    bad = w_min <= settings.tolerances.arithmetic * np.maximum(w_max, 1.0)
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise SpectralError(f"{operation}: матрица не положительно определена, собственное значение "
                            f"{w_min[idx]:.6g}", eigenvalue=float(w_min[idx]))
    return w, v, single


def _rebuild(w: np.ndarray, v: np.ndarray, single: bool) -> np.ndarray:
    out = np.einsum("bij,bj,bkj->bik", v, w, v)
    return out[0] if single else out


def sqrt_spd(A) -> np.ndarray:
    """Симметричный корень S: S·S = A"""
    w, v, single = _spd_eigen(A, "sqrt_spd")
    return _rebuild(np.sqrt(w), v, single)


def inv_sqrt_spd(A) -> np.ndarray:
    """A^{-1/2}"""
    w, v, single = _spd_eigen(A, "inv_sqrt_spd")
    return _rebuild(1.0 / np.sqrt(w), v, single)


def inverse_spd(A) -> np.ndarray:
    """A^{-1} через спектральное разложение"""
    w, v, single = _spd_eigen(A, "inverse_spd")
    return _rebuild(1.0 / w, v, single)


def spd_power(A, power: float) -> np.ndarray:
    w, v, single = _spd_eigen(A, "spd_power")
    return _rebuild(w ** power, v, single)


def eigen_bounds(A) -> tuple[np.ndarray, np.ndarray]:
    """(λ_min, λ_max) симметричной части каждой матрицы пачки"""
    batch, single = _as_batch(A)
    sym = 0.5 * (batch + np.swapaxes(batch, 1, 2))
    w, _ = jacobi_eigh(sym)
    lo, hi = w.min(axis=1), w.max(axis=1)
    return (lo[0], hi[0]) if single else (lo, hi)
