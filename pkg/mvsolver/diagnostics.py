"""
Проверки решения по траекториям ансамбля.
"""
from typing import Optional, Sequence, Union

import numpy as np

from config import settings
from convexcore import ConvexConstraint, InteriorCertificate, interior_constants, normal_cone_residuals
from dynamics.system import MVSystem
from logger_config import logger
from measures import EmpiricalMeasure
from mvsolver.paths import PathEnsemble
from mvsolver.schemas import SolutionDiagnostics
from utils.errors import ConfigurationError

# Сдвиги траектории, из которых строятся пробные траектории y = P(x + δe_i)
PROBE_SHIFTS = (0.1, -0.1)


def default_probes(constraint: ConvexConstraint, count: int = 16, seed: Optional[int] = None) -> np.ndarray:
    """Точки D(Π) для постоянных пробных траекторий: характерные точки и случайная выборка"""
    rng = np.random.default_rng(settings.runtime.seed if seed is None else seed)
    if constraint.geometry is not None:
        return constraint.geometry.sample(rng, count)
    return rng.uniform(-2.0, 2.0, size=(count, constraint.dim))


def _probe_paths(path: PathEnsemble, constraint: ConvexConstraint, probes: np.ndarray):
    """Пробные траектории формы (N, S, m): постоянные в точках probes и сдвинутые копии x"""
    contact = path.contact_points()
    for v in probes:
        yield np.broadcast_to(v, contact.shape)
    if constraint.geometry is None:
        return
    for delta in PROBE_SHIFTS:
        for i in range(path.dim):
            shifted = contact.copy()
            shifted[..., i] += delta
            yield constraint.geometry._project(shifted.reshape(-1, path.dim)).reshape(contact.shape)


def _inequality_residual(path: PathEnsemble, constraint: ConvexConstraint, probes: np.ndarray) -> float:
    """
    max_y [Σ ⟨y_k - x̃_k, Δk_k⟩ + h Σ Π(x̃_k) - h Σ Π(y_k)], x̃ - точки касания схемы.
    Для допустимого решения не больше нуля.
    """
    contact = path.contact_points()
    flat = contact.reshape(-1, path.dim)
    pi_x = constraint.value(flat).reshape(contact.shape[:2])
    pi_x = np.where(np.isfinite(pi_x), pi_x, 0.0) if constraint.geometry is not None else pi_x
    worst = -np.inf
    for y in _probe_paths(path, constraint, probes):
        pi_y = constraint.value(y.reshape(-1, path.dim)).reshape(contact.shape[:2])
        lhs = np.sum((y - contact) * path.increments, axis=(1, 2)) + path.grid.h * np.sum(pi_x - pi_y, axis=1)
        worst = max(worst, float(lhs.max()))
    return worst


def _equation_residual(path: PathEnsemble, system: MVSystem) -> float:
    """max_t |x(t) + Σ H Δk - x₀ - Σ f h - Σ g ΔB| с коэффициентами, пересчитанными в (x_k, μ_k)"""
    if path.noise is None:
        raise ConfigurationError("для невязки уравнения нужны сохранённые приращения ΔB", field="paths")
    coefficients, h = system.coefficients, path.grid.h
    total = np.zeros((path.particles, system.dim))
    worst = 0.0
    for k in range(path.grid.steps):
        x, t, u = path.states[:, k], path.grid.nodes[k], path.controls[k]
        mu = EmpiricalMeasure(x)
        H = system.oblique.evaluate(x, mu, t)
        total += (np.einsum("nij,nj->ni", H, path.increments[:, k]) - h * coefficients.drift(x, mu, u, t)
                  - np.einsum("nij,nj->ni", coefficients.diffusion(x, mu, u, t), path.noise[:, k]))
        residual = path.states[:, k + 1] + total - path.states[:, 0]
        worst = max(worst, float(np.linalg.norm(residual, axis=1).max()))
    return worst


def _variation_consistent(path: PathEnsemble) -> bool:
    """k(s) = 0, ↕k↕ не убывает и её приращения не меньше |Δk|"""
    tol = settings.tolerances.geometric
    if np.abs(path.k[:, 0]).max() > 0:
        return False
    gain = np.diff(path.variation, axis=1)
    jumps = np.linalg.norm(np.diff(path.k, axis=1), axis=2)
    return bool(np.all(gain >= -tol) and np.all(gain + tol * (1 + path.variation[:, 1:]) >= jumps))


def complementarity(path: PathEnsemble, constraint: Optional[ConvexConstraint] = None) -> float:
    """Σ dist(x̃_k, ∂K)·|Δk_k| / ↕k↕(T): отражение действует только на границе"""
    constraint = constraint or path.constraint
    constraint.require_indicator("complementarity")
    contact = path.contact_points()
    depth = constraint.geometry.depth(contact.reshape(-1, path.dim)).reshape(contact.shape[:2])
    weighted = np.sum(depth * np.linalg.norm(path.increments, axis=2))
    total = float(path.variation[:, -1].sum())
    return float(weighted / total) if total > 0 else 0.0


def normal_cone_consistency(path: PathEnsemble, probes: np.ndarray,
                            constraint: Optional[ConvexConstraint] = None) -> float:
    """max невязки нормального конуса по шагам с ненулевым отражением"""
    constraint = constraint or path.constraint
    active = np.linalg.norm(path.increments, axis=2) > 0
    if not np.any(active):
        return 0.0
    xs = path.contact_points()[active]
    us = path.increments[active]
    return float(normal_cone_residuals(constraint, xs, us, probes).max())


def residual_report(path: PathEnsemble, system: MVSystem, probes: Optional[np.ndarray] = None) -> SolutionDiagnostics:
    """
    (1) интегральное неравенство против пробных траекторий,
    (2) max dist(x(t), D(∂Π)),
    (3) невязка уравнения во всех узлах,
    плюс дополнительность и нормальный конус для индикаторов.
    """
    constraint = system.constraint
    probes = default_probes(constraint) if probes is None else np.atleast_2d(np.asarray(probes, dtype=float))
    scale = 1.0 + float(np.abs(path.states).max())

    inequality = _inequality_residual(path, constraint, probes)
    flat = path.states.reshape(-1, path.dim)
    feasibility = float(constraint.domain_distance(flat).max())
    equation = _equation_residual(path, system)
    variation_ok = _variation_consistent(path)

    comp, cone = None, None
    if constraint.is_indicator:
        comp = complementarity(path, constraint)
        cone = normal_cone_consistency(path, probes, constraint)

    tol = settings.tolerances.composite
    feasibility_required = path.scheme == "projected"
    passed = (inequality <= tol * scale and equation <= tol * scale and variation_ok
              and (not feasibility_required or feasibility <= settings.tolerances.geometric * scale))
    report = SolutionDiagnostics(
        scheme=path.scheme, particles=path.particles, probes=len(probes), inequality_residual=inequality,
        feasibility_residual=feasibility, equation_residual=equation, complementarity=comp,
        normal_cone_residual=cone, variation_consistent=variation_ok, tolerance=tol,
        feasibility_required=feasibility_required, passed=passed)
    logger.debug(f"{'✅' if passed else '❌'} Диагностика решения ({path.scheme}): неравенство {inequality:.2e}, "
                 f"допустимость {feasibility:.2e}, уравнение {equation:.2e}")
    return report


def interior_bound_margin(path: PathEnsemble, cert: InteriorCertificate,
                          constraint: Optional[ConvexConstraint] = None) -> np.ndarray:
    """
    Запас нижней оценки по каждой частице:
        min_{r ≤ t} [∫_r^t ⟨x - a, dk⟩ - λ₁(↕k↕_t - ↕k↕_r) + λ₂∫_r^t |x - a| + λ₃(t - r)].
    Минимум по подынтервалам через накопленную сумму G: min_t (G_t - max_{r ≤ t} G_r).
    """
    constraint = constraint or path.constraint
    lam1, lam2, lam3 = interior_constants(constraint, cert)
    contact = path.contact_points()
    offset = contact - cert.anchor
    terms = (np.sum(offset * path.increments, axis=2) - lam1 * np.linalg.norm(path.increments, axis=2)
             + lam2 * path.grid.h * np.linalg.norm(path.states[:, :-1] - cert.anchor, axis=2) + lam3 * path.grid.h)
    G = np.concatenate([np.zeros((path.particles, 1)), np.cumsum(terms, axis=1)], axis=1)
    return np.min(G - np.maximum.accumulate(G, axis=1), axis=1)


def interior_bound_check(paths: Union[PathEnsemble, Sequence[PathEnsemble]], cert: InteriorCertificate,
                         constraint: Optional[ConvexConstraint] = None) -> float:
    """Минимальный запас по всем частицам и подынтервалам; проверка пройдена при ≥ -1e-8"""
    ensembles = [paths] if isinstance(paths, PathEnsemble) else list(paths)
    margin = min(float(interior_bound_margin(e, cert, constraint).min()) for e in ensembles)
    status = "✅" if margin >= -settings.tolerances.composite else "❌"
    logger.debug(f"{status} Нижняя оценка ∫⟨x - a, dk⟩: запас {margin:.3e}")
    return margin
