"""
Диагностика: свойства (a)-(g) аппроксимации Моро-Иосиды, невязка нормального конуса,
константы оценки снизу ∫⟨x - a, dk⟩ ≥ λ₁↕k↕ - λ₂∫|x - a| - λ₃(t - s).
"""
from typing import Iterable, Optional, Sequence

import numpy as np

from config import settings
from convexcore.constraint import ConvexConstraint
from convexcore.schemas import InteriorConstants, PropertyReport, PropertyResult
from convexcore.yosida import _check_eps, yosida_all
from logger_config import logger
from utils.errors import CertificateError, DomainError

PROPERTY_DESCRIPTIONS = {
    "a": "Π_ε(x) = (ε/2)|∇Π_ε(x)|² + Π(J_ε x)",
    "b": "∇Π_ε(x) ∈ ∂Π(J_ε x)",
    "c": "|∇Π_ε(x) - ∇Π_ε(y)| ≤ |x - y|/ε",
    "d": "⟨∇Π_ε(x) - ∇Π_ε(y), x - y⟩ ≥ 0",
    "e": "⟨∇Π_ε(x) - ∇Π_ε'(y), x - y⟩ ≥ -(ε + ε')⟨∇Π_ε(x), ∇Π_ε'(y)⟩",
    "f": "0 = Π_ε(0) ≤ Π_ε(x), J_ε(0) = ∇Π_ε(0) = 0",
    "g": "(ε/2)|∇Π_ε(x)|² ≤ Π_ε(x) ≤ ⟨∇Π_ε(x), x⟩",
}


class InteriorCertificate:
    """Точка a и радиус r₀ > 0 такие, что B̄(a, r₀) ⊂ D(∂Π)"""

    def __init__(self, anchor: Sequence[float], radius: float):
        if not radius > 0:
            raise CertificateError(f"радиус сертификата должен быть положительным, получено {radius}",
                                   field="radius")
        self.anchor = np.atleast_1d(np.asarray(anchor, dtype=float))
        self.radius = float(radius)

    def __repr__(self):
        return f"InteriorCertificate(anchor={self.anchor.tolist()}, radius={self.radius})"


def check_yosida_properties(constraint: ConvexConstraint, eps_list: Iterable[float], sample_points,
                            probes: Optional[np.ndarray] = None) -> PropertyReport:
    """
    Максимальные нарушения свойств (a)-(g) по всем точкам, парам точек и парам ε.
    Свойство проходит, если нарушение ≤ 1e-8 (формулы в замкнутом виде) или ≤ 1e-5 (итерационные случаи).
    """
    eps_list = [float(e) for e in eps_list]
    for eps in eps_list:
        _check_eps(eps)
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if not np.all(np.isfinite(pts)):
        raise DomainError("точки выборки должны быть конечными", field="sample_points")

    if probes is None:
        # Зонды из D(Π): сами точки, спроецированные на множество, и характерные точки
        if constraint.geometry is not None:
            probes = np.vstack([constraint.geometry._project(pts), constraint.geometry.corners()])
            probes = probes[np.all(np.isfinite(probes), axis=1)]
        else:
            probes = pts
    probe_values = constraint.value(probes)

    closed_form = constraint.closed_form
    tol = settings.tolerances.composite if closed_form else settings.tolerances.grid
    zero = np.zeros((1, constraint.dim))

    violations = {key: 0.0 for key in PROPERTY_DESCRIPTIONS}
    cache = {}
    for eps in eps_list:
        value, grad, j = yosida_all(constraint, eps, pts)
        cache[eps] = grad

        # (a) разложение значения
        pi_j = constraint.value(j) if constraint.kind != "indicator" else np.zeros(len(pts))
        a = np.abs(value - (0.5 * eps * np.sum(grad ** 2, axis=1) + pi_j))
        violations["a"] = max(violations["a"], float(a.max()))

        # (b) субградиентное неравенство против зондов: ⟨u, v - Jx⟩ + Π(Jx) ≤ Π(v)
        lhs = grad @ probes.T - np.sum(grad * j, axis=1)[:, None] + pi_j[:, None]
        b = np.max(lhs - probe_values[None, :])
        violations["b"] = max(violations["b"], float(max(b, 0.0)))

        # (c), (d) по всем парам
        dg = grad[:, None, :] - grad[None, :, :]
        dx = pts[:, None, :] - pts[None, :, :]
        c = np.linalg.norm(dg, axis=2) - np.linalg.norm(dx, axis=2) / eps
        violations["c"] = max(violations["c"], float(max(c.max(), 0.0)))
        d = -np.sum(dg * dx, axis=2)
        violations["d"] = max(violations["d"], float(max(d.max(), 0.0)))

        # (f) нормировка в нуле и неотрицательность
        v0, g0, j0 = yosida_all(constraint, eps, zero)
        f = max(abs(v0[0]), np.abs(g0).max(), np.abs(j0).max(), float(max(-value.min(), 0.0)))
        violations["f"] = max(violations["f"], float(f))

        # (g) вилка
        lower = 0.5 * eps * np.sum(grad ** 2, axis=1) - value
        upper = value - np.sum(grad * pts, axis=1)
        violations["g"] = max(violations["g"], float(max(lower.max(), upper.max(), 0.0)))

    # (e) по парам ε, ε'
    for eps in eps_list:
        for eps2 in eps_list:
            gx, gy = cache[eps], cache[eps2]
            dg = gx[:, None, :] - gy[None, :, :]
            dx = pts[:, None, :] - pts[None, :, :]
            cross = gx @ gy.T
            e = -(np.sum(dg * dx, axis=2) + (eps + eps2) * cross)
            violations["e"] = max(violations["e"], float(max(e.max(), 0.0)))

    report = PropertyReport(constraint=constraint.describe(), epsilons=eps_list, samples=len(pts),
                            closed_form=closed_form)
    for key, text in PROPERTY_DESCRIPTIONS.items():
        report.properties[key] = PropertyResult(name=key, description=text, max_violation=violations[key],
                                                tolerance=tol, passed=violations[key] <= tol)
    status = "✅" if report.passed else "❌"
    logger.debug(f"{status} Свойства Моро-Иосиды для {report.constraint}: "
                 f"{ {k: f'{v:.2e}' for k, v in violations.items()} }")
    return report


def normal_cone_residuals(constraint: ConvexConstraint, xs: np.ndarray, us: np.ndarray,
                          probes: np.ndarray) -> np.ndarray:
    """
    Невязка вариационного неравенства ⟨u, v - x⟩ ≤ 0 для пачки пар (x, u).
    К зондам добавляется точка P(x + δu/|u|): u лежит в нормальном конусе тогда и только тогда,
    когда эта проекция совпадает с x.
    """
    constraint.require_indicator("normal_cone_residual")
    geometry = constraint.geometry
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    us = np.atleast_2d(np.asarray(us, dtype=float))
    probes = np.atleast_2d(np.asarray(probes, dtype=float))

    norms = np.linalg.norm(us, axis=1)
    scaled = 1.0 + norms
    res = np.max(us @ probes.T - np.sum(us * xs, axis=1)[:, None], axis=1) / scaled

    direction = np.where(norms[:, None] > 0, us / np.where(norms > 0, norms, 1.0)[:, None], 0.0)
    delta = 1e-3 * (1.0 + np.linalg.norm(xs, axis=1))
    auto_probe = geometry._project(xs + delta[:, None] * direction)
    res = np.maximum(res, np.sum(us * (auto_probe - xs), axis=1) / scaled)

    res = np.maximum(res, 0.0)
    outside = geometry.distance(xs) > settings.tolerances.geometric
    return np.where(outside, np.inf, res)


def normal_cone_residual(constraint: ConvexConstraint, x, u, probes) -> float:
    """max(0, max_v ⟨u, v - x⟩/(1 + |u|)); +∞, если x вне множества"""
    return float(normal_cone_residuals(constraint, np.atleast_2d(x), np.atleast_2d(u), probes)[0])


def interior_constants(constraint: ConvexConstraint, cert: InteriorCertificate) -> InteriorConstants:
    """
    Константы (λ₁, λ₂, λ₃) нижней оценки ∫⟨x - a, dk⟩. Для индикатора: (r₀, 0, 0).
    Для гладкой части формулы нет: оценка отдаётся только по индикаторной части с предупреждением.
    """
    if cert.anchor.size != constraint.dim:
        raise CertificateError(f"размерность якоря {cert.anchor.size} ≠ {constraint.dim}", field="anchor")

    if constraint.geometry is not None:
        depth = float(constraint.geometry.depth(cert.anchor))
        if depth + settings.tolerances.geometric < cert.radius:
            raise CertificateError(
                f"шар B̄({cert.anchor.tolist()}, {cert.radius}) не лежит в множестве (глубина {depth:.6g})",
                field="radius")
    if constraint.kind != "indicator":
        logger.warning(f"⚠️ Константы λ₂, λ₃ для '{constraint.describe()}' не проверены: "
                       f"возвращается оценка индикаторного вида")
    return InteriorConstants(cert.radius, 0.0, 0.0)


def constants_verified(constraint: ConvexConstraint) -> bool:
    """Проверены ли константы interior_constants для данного типа Π"""
    return constraint.kind == "indicator"
