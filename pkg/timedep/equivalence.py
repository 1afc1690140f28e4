"""
Численная проверка сведения: решение на Ξ, поднятое обратно x = H(t)x̄, против прямой
схемы на подвижном отрезке H(t)Ξ (только для m = 1) при общем шуме.
"""
from typing import Optional, Sequence

import numpy as np

from config import settings
from convexcore import Box, HalfSpace
from dynamics.spectral import inverse_spd
from logger_config import logger
from measures import EmpiricalMeasure
from mvsolver import (
    ConvergenceEntry,
    ConvergenceReport,
    NoiseSource,
    PathEnsemble,
    TimeGrid,
    is_decreasing,
    mean_and_stderr,
    run_replications,
    simulate_projected,
    sup_distance_squared,
)
from timedep.problem import MovingConstraintProblem, lift_solution, reduce_time_dependent
from utils.errors import ConfigurationError


def interval_bounds(prob: MovingConstraintProblem) -> Optional[tuple[float, float]]:
    """Ξ ⊂ ℝ как отрезок или полупрямая; None, если прямой схемы для Ξ нет"""
    geometry = prob.base.geometry
    if prob.dim != 1:
        return None
    if isinstance(geometry, Box):
        return float(geometry.lower[0]), float(geometry.upper[0])
    if isinstance(geometry, HalfSpace):
        if geometry.normal[0] > 0:
            return -np.inf, geometry.offset
        return -geometry.offset, np.inf
    return None


def simulate_moving_interval(prob: MovingConstraintProblem, grid: TimeGrid, increments: np.ndarray,
                             noise: Optional[NoiseSource] = None) -> PathEnsemble:
    """
    Прямая схема на [H(t)·lo, H(t)·hi]: y = x_k + h f + g ΔB_k, x_{k+1} - проекция y на отрезок в t_{k+1}.
    Мера в коэффициентах - μ_k∘H(t_k), то есть закон H⁻¹(t_k)x_k.
    """
    bounds = interval_bounds(prob)
    if bounds is None:
        raise ConfigurationError("прямая схема на подвижном множестве есть только для отрезков в ℝ",
                                 field="timedep")
    lo, hi = bounds
    coefficients = prob.coefficients
    particles = len(increments)
    states = np.empty((particles, grid.steps + 1, 1))
    dk = np.empty((particles, grid.steps, 1))
    x = np.broadcast_to(prob.x0, (particles, 1)).copy()
    states[:, 0] = x
    for k in range(grid.steps):
        t = grid.nodes[k]
        scale = float(prob.matrix(t)[0, 0])
        mu = EmpiricalMeasure(x / scale)
        y = x + grid.h * coefficients.drift(x, mu, None, t) + np.einsum(
            "nij,nj->ni", coefficients.diffusion(x, mu, None, t), increments[:, k])
        scale_next = float(prob.matrix(grid.nodes[k + 1])[0, 0])
        x = np.clip(y, scale_next * lo, scale_next * hi)
        dk[:, k] = y - x
        states[:, k + 1] = x
    return PathEnsemble(grid, states, dk, noise=increments, scheme="projected",
                        replication=noise.replication if noise is not None else 0)


def moving_feasibility(prob: MovingConstraintProblem, path: PathEnsemble) -> float:
    """max_k b_H·dist(H⁻¹(t_k)x_k, Ξ) - оценка сверху для dist(x_k, H(t_k)Ξ)"""
    inverses = inverse_spd(np.stack([prob.matrix(t) for t in path.times]))
    bars = np.einsum("kij,nkj->nki", inverses, path.states)
    return prob.oblique.b_H * float(prob.base.domain_distance(bars.reshape(-1, path.dim)).max())


def equivalence_check(prob: MovingConstraintProblem, steps_ladder: Sequence[int], particles: Optional[int] = None,
                      noise: Optional[NoiseSource] = None, correction: str = "drift-only", replications: int = 1,
                      threads: Optional[int] = None) -> ConvergenceReport:
    """
    Для каждой сетки лестницы: сведённая система -> simulate_projected -> подъём, затем
    допустимость подъёма и (для отрезков) E sup|x_lift - x_direct|² с общим броуновским путём.
    Дополнительно на самой мелкой сетке сравнивается и другая форма поправки.
    """
    ladder = sorted({int(s) for s in steps_ladder})
    if not ladder:
        raise ConfigurationError("пустая лестница сеток", field="grid.steps")
    particles = settings.runtime.particles if particles is None else particles
    base = noise or NoiseSource(settings.runtime.seed)
    resolution = ladder[-1]
    t0, t1 = prob.horizon
    direct = interval_bounds(prob) is not None
    other = "as-printed" if correction == "drift-only" else "drift-only"
    systems = {correction: reduce_time_dependent(prob, correction)}
    if direct:
        systems[other] = reduce_time_dependent(prob, other, validate=False)

    def run(steps: int, form: str, source: NoiseSource):
        grid = TimeGrid(t0, t1, steps)
        system = systems[form]
        dB = source.increments(steps, particles, system.noise_dim, grid.h, resolution)
        lifted = lift_solution(simulate_projected(system, grid, particles, source, increments=dB), prob.oblique)
        reference = simulate_moving_interval(prob, grid, dB, source) if direct else None
        return lifted, reference

    def task(r: int):
        source = base.for_replication(base.replication + r)
        squared, feasibility = [], 0.0
        for steps in ladder:
            lifted, reference = run(steps, correction, source)
            feasibility = max(feasibility, moving_feasibility(prob, lifted))
            squared.append(sup_distance_squared([lifted], [reference]) if direct else None)
        printed = None
        if direct:
            lifted, reference = run(resolution, other, source)
            printed = sup_distance_squared([lifted], [reference])
        return squared, feasibility, printed

    results = run_replications(task, replications, threads)
    feasibility = max(r[1] for r in results)
    feasible = feasibility <= settings.tolerances.composite
    entries, notes, details = [], [], {"feasibility": feasibility}
    passed = feasible
    monotone = True
    if direct:
        for i, steps in enumerate(ladder):
            value, stderr = mean_and_stderr(np.concatenate([r[0][i] for r in results]))
            entries.append(ConvergenceEntry(parameter=(t1 - t0) / steps, distance=float(np.sqrt(value)),
                                            stderr=float(stderr / (2 * np.sqrt(value))) if value > 0 else 0.0))
        monotone = is_decreasing([e.distance for e in entries])
        finest = entries[-1]
        bound = 10 * np.sqrt(finest.parameter)
        details[f"{other}_distance"] = float(np.sqrt(np.mean(np.concatenate([r[2] for r in results]))))
        details["finest_bound"] = float(bound)
        passed = passed and monotone and finest.distance <= bound
    else:
        notes.append("прямой схемы для этого Ξ нет: проверены только допустимость и невязки")
    if prob.oblique.derivative_fallback_used:
        notes.append("H'(t) вычислена центральной разностью")

    status = "✅" if passed else "❌"
    logger.info(f"{status} Эквивалентность сведения '{prob.name}' ({correction}): допустимость {feasibility:.2e}"
                + "".join(f", h={e.parameter:g}: {e.distance:.3e}" for e in entries))
    return ConvergenceReport(name="equivalence_check", parameter="h", entries=entries, monotone=monotone,
                             passed=passed, details=details, notes=notes)
