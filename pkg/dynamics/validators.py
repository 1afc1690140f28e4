"""
Статистическая проверка предположений о коэффициентах по случайным парам аргументов:
липшицевость и линейный рост f, g; симметрия, эллиптичность и липшицевость H, H⁻¹;
нормировка и липшицевость стоимостей; граница производной H'(t).
"""
from typing import Any, Optional, Sequence

import numpy as np

from config import settings
from dynamics.fields import CoefficientField, CostField, ObliqueField
from dynamics.schemas import DerivativeBound, ValidationReport
from dynamics.spectral import eigen_bounds, inverse_spd, symmetry_residual
from logger_config import logger
from measures import EmpiricalMeasure, w2_to_origin, wasserstein2
from utils.errors import ConfigurationError, SpectralError

# Сколько худших пар попадает в список нарушений
MAX_LISTED = 5
# Пар состояний на одну пару мер
STATE_BATCH = 100


class Sampler:
    """
    Источник случайных аргументов: точки из куба [-scale, scale]^m,
    равномерные эмпирические меры с atoms атомами, моменты времени из horizon.
    """

    def __init__(self, dim: int, seed: Optional[int] = None, scale: float = 2.0, atoms: int = 8,
                 horizon: Sequence[float] = (0.0, 1.0)):
        self.dim = dim
        self.scale = float(scale)
        self.atoms = atoms
        self.horizon = (float(horizon[0]), float(horizon[1]))
        self.rng = np.random.default_rng(settings.runtime.seed if seed is None else seed)

    def points(self, count: int) -> np.ndarray:
        return self.rng.uniform(-self.scale, self.scale, size=(count, self.dim))

    def measure(self) -> EmpiricalMeasure:
        return EmpiricalMeasure(self.rng.uniform(-self.scale, self.scale, size=(self.atoms, self.dim)))

    def times(self, count: int) -> np.ndarray:
        return self.rng.uniform(*self.horizon, size=count)

    def unit_vectors(self, count: int) -> np.ndarray:
        u = self.rng.standard_normal((count, self.dim))
        return u / np.linalg.norm(u, axis=1, keepdims=True)


def _measure_pairs(sampler: Sampler, pairs: int):
    """Пары мер; каждая вторая пара - одна и та же мера (проверка по состоянию при μ = ν)"""
    count = max(1, int(np.ceil(pairs / STATE_BATCH)))
    for i in range(count):
        mu = sampler.measure()
        nu = mu if i % 2 == 0 else sampler.measure()
        yield mu, nu, (0.0 if nu is mu else wasserstein2(mu, nu))


def _listed(ratios: np.ndarray, labels: list, limit: float) -> list:
    order = np.argsort(ratios)[::-1]
    return [labels[i] for i in order[:MAX_LISTED] if ratios[i] > limit]


def validate_lipschitz(field: CoefficientField, sampler: Sampler, pairs: Optional[int] = None,
                       controls: Optional[Sequence[Any]] = None, t: float = 0.0) -> ValidationReport:
    """
    L̂ = max (|f(x,μ) - f(y,ν)| + |g(x,μ) - g(y,ν)|)/(|x - y| + W₂(μ,ν)) по случайным парам
    и линейный рост max (|f(x,μ)| + |g(x,μ)|)/(|x| + W₂(μ,δ₀)).
    Нормы матриц диффузии - фробениусовы.
    """
    pairs = settings.runtime.lipschitz_pairs if pairs is None else pairs
    controls = list(controls) if controls is not None else [None]
    ratios, growth, labels = [], [], []

    for mu, nu, w in _measure_pairs(sampler, pairs):
        x = sampler.points(STATE_BATCH)
        y = sampler.points(STATE_BATCH)
        denom = np.linalg.norm(x - y, axis=1) + w
        growth_denom = np.linalg.norm(x, axis=1) + w2_to_origin(mu)
        for u in controls:
            fx, fy = field.drift(x, mu, u, t), field.drift(y, nu, u, t)
            gx, gy = field.diffusion(x, mu, u, t), field.diffusion(y, nu, u, t)
            num = np.linalg.norm(fx - fy, axis=1) + np.linalg.norm(gx - gy, axis=(1, 2))
            ratio = np.where(denom > 0, num / np.where(denom > 0, denom, 1.0), 0.0)
            size = np.linalg.norm(fx, axis=1) + np.linalg.norm(gx, axis=(1, 2))
            grow = np.where(growth_denom > 0, size / np.where(growth_denom > 0, growth_denom, 1.0), 0.0)
            ratios.append(ratio)
            growth.append(grow)
            labels += [f"x={np.round(a, 4).tolist()}, y={np.round(b, 4).tolist()}, W₂={w:.4g}, u={u}"
                       for a, b in zip(x, y)]

    ratios = np.concatenate(ratios)
    growth = np.concatenate(growth)
    estimate = float(ratios.max())
    growth_estimate = float(growth.max())
    limit = field.lipschitz * (1 + settings.tolerances.geometric)

    violations = [f"липшицевость: {item}" for item in _listed(ratios, labels, limit)]
    growth_ok = growth_estimate <= limit or not field.normalized
    if not growth_ok:
        violations.append(f"линейный рост: {growth_estimate:.6g} > L = {field.lipschitz:.6g}")
    passed = estimate <= limit and growth_ok

    logger.debug(f"{'✅' if passed else '❌'} Липшицевость '{field.name}': L̂ = {estimate:.6g}, "
                 f"L = {field.lipschitz:.6g}, рост {growth_estimate:.6g}")
    return ValidationReport(check="lipschitz", subject=field.name, samples=len(ratios),
                            declared=field.lipschitz, estimate=estimate, passed=passed, violations=violations,
                            details={"growth": growth_estimate, "growth_checked": float(field.normalized)})


def linear_growth_check(field: CoefficientField, sampler: Sampler, samples: int = 1000) -> ValidationReport:
    """|f(x,μ)| + |g(x,μ)| ≤ L(|x| + W₂(μ,δ₀)) без проверки приращений"""
    report = validate_lipschitz(field, sampler, pairs=samples)
    growth = report.details["growth"]
    passed = growth <= field.lipschitz * (1 + settings.tolerances.geometric)
    return ValidationReport(check="linear-growth", subject=field.name, samples=report.samples,
                            declared=field.lipschitz, estimate=growth, passed=passed,
                            violations=[] if passed else [f"рост {growth:.6g} > L = {field.lipschitz:.6g}"])


def _sample_matrices(field: ObliqueField, sampler: Sampler, count: int):
    """Пачки H по случайным аргументам: [(H (B,m,m), состояния, мера, момент)]"""
    batches = []
    if field.time_dependent:
        for t in sampler.times(count):
            batches.append((field.at_time(t)[None], None, None, float(t)))
        return batches
    for _ in range(max(1, count // STATE_BATCH)):
        mu = sampler.measure()
        x = sampler.points(STATE_BATCH)
        batches.append((np.array(field.evaluate(x, mu)), x, mu, 0.0))
    return batches


def validate_oblique(field: ObliqueField, sampler: Sampler, samples: int = 2000) -> ValidationReport:
    """
    Отношения Рэлея ⟨Hu, u⟩ по случайным единичным u, спектральная полоса, симметрия,
    оценки липшицевости H и H⁻¹ по (x, μ) (для H(t) - по t).
    Полоса должна лежать в объявленном [a_H, b_H].
    """
    batches = _sample_matrices(field, sampler, samples)
    H = np.concatenate([b[0] for b in batches])
    u = sampler.unit_vectors(len(H))
    rayleigh = np.einsum("bi,bij,bj->b", u, H, u)
    asym = float(np.max(symmetry_residual(H)))
    lo, hi = eigen_bounds(H)
    band = (float(np.min(lo)), float(np.max(hi)))

    tol = settings.tolerances.geometric
    violations = []
    symmetric = asym <= tol * max(1.0, float(np.abs(H).max()))
    if not symmetric:
        violations.append(f"симметрия: |H - Hᵀ| = {asym:.3e}")
    if band[0] < field.a_H * (1 - tol) - tol:
        violations.append(f"эллиптичность: λ_min = {band[0]:.6g} < a_H = {field.a_H:.6g}")
    if band[1] > field.b_H * (1 + tol) + tol:
        violations.append(f"эллиптичность: λ_max = {band[1]:.6g} > b_H = {field.b_H:.6g}")

    lip_H, lip_inv = _oblique_lipschitz(field, batches, sampler, symmetric)
    if field.lipschitz is not None and lip_H is not None and lip_H > field.lipschitz * (1 + tol):
        violations.append(f"липшицевость H: {lip_H:.6g} > {field.lipschitz:.6g}")

    passed = not violations
    logger.debug(f"{'✅' if passed else '❌'} Косая матрица '{field.name}': полоса [{band[0]:.4g}, {band[1]:.4g}], "
                 f"асимметрия {asym:.2e}")
    return ValidationReport(
        check="oblique", subject=field.name, samples=len(H), declared=field.lipschitz, estimate=lip_H,
        passed=passed, violations=violations,
        details={"rayleigh_min": float(rayleigh.min()), "rayleigh_max": float(rayleigh.max()),
                 "eigen_min": band[0], "eigen_max": band[1], "a_H": field.a_H, "b_H": field.b_H,
                 "symmetry_residual": asym, "lipschitz_H": lip_H, "lipschitz_H_inv": lip_inv},
    )


def _oblique_lipschitz(field: ObliqueField, batches, sampler: Sampler, symmetric: bool):
    """Оценки липшицевости H и H⁻¹ по соседним пачкам; None, если H несимметрична"""
    if not symmetric:
        return None, None
    if field.time_dependent:
        times = np.array([b[3] for b in batches])
        order = np.argsort(times)
        H = np.concatenate([batches[i][0] for i in order])
        dt = np.diff(times[order])
        keep = dt > 0
        if not np.any(keep):
            return 0.0, 0.0
        dH = np.linalg.norm(np.diff(H, axis=0), axis=(1, 2))[keep] / dt[keep]
        dInv = np.linalg.norm(np.diff(inverse_spd(H), axis=0), axis=(1, 2))[keep] / dt[keep]
        return float(dH.max()), float(dInv.max())

    lip_H, lip_inv = 0.0, 0.0
    for (H1, x, mu, _), (_, _, nu, _) in zip(batches, batches[1:] + batches[:1]):
        y = sampler.points(len(x))
        H2 = np.array(field.evaluate(y, nu))
        denom = np.linalg.norm(x - y, axis=1) + (0.0 if nu is mu else wasserstein2(mu, nu))
        denom = np.where(denom > 0, denom, np.inf)
        try:
            inv1, inv2 = inverse_spd(H1), inverse_spd(H2)
        except SpectralError:
            return None, None
        lip_H = max(lip_H, float(np.max(np.linalg.norm(H1 - H2, axis=(1, 2)) / denom)))
        lip_inv = max(lip_inv, float(np.max(np.linalg.norm(inv1 - inv2, axis=(1, 2)) / denom)))
    return lip_H, lip_inv


def validate_cost(costs: CostField, sampler: Sampler, controls: Sequence[Any], pairs: int = 2000) -> ValidationReport:
    """b(0, u) = α(0) = 0 и |b(x,u) - b(y,u)| + |α(x) - α(y)| ≤ L|x - y| равномерно по u"""
    if not controls:
        raise ConfigurationError("множество управлений пусто", field="controls")
    x = sampler.points(pairs)
    y = sampler.points(pairs)
    dist = np.linalg.norm(x - y, axis=1)
    dist = np.where(dist > 0, dist, np.inf)
    terminal = np.abs(costs.terminal(x) - costs.terminal(y)) / dist

    origin = np.zeros((1, costs.dim))
    violations = []
    worst = float(terminal.max())
    for u in controls:
        running = np.abs(costs.running(x, u) - costs.running(y, u)) / dist
        worst = max(worst, float(running.max()))
        b0 = abs(float(costs.running(origin, u)[0]))
        if b0 > settings.tolerances.arithmetic:
            violations.append(f"нормировка: b(0, {u}) = {b0:.3e}")
    a0 = abs(float(costs.terminal(origin)[0]))
    if a0 > settings.tolerances.arithmetic:
        violations.append(f"нормировка: α(0) = {a0:.3e}")
    if worst > costs.lipschitz * (1 + settings.tolerances.geometric):
        violations.append(f"липшицевость: {worst:.6g} > L = {costs.lipschitz:.6g}")

    return ValidationReport(check="cost", subject=costs.name, samples=pairs * len(controls),
                            declared=costs.lipschitz, estimate=worst, passed=not violations,
                            violations=violations)


def derivative_bound(field: ObliqueField, horizon: Sequence[float], nodes: int = 1001) -> DerivativeBound:
    """M = sup_t |H'(t)| (спектральная норма) по равномерной сетке и оценка ½·a_H^{-3/2}·M"""
    if not field.time_dependent:
        raise ConfigurationError(f"H '{field.name}' не зависит от времени", field="oblique")
    t0, t1 = float(horizon[0]), float(horizon[1])
    step = 1e-6 * (t1 - t0)
    times = np.linspace(t0, t1, nodes)
    M = max(float(np.linalg.norm(field.derivative_at(t, step), ord=2)) for t in times)
    return DerivativeBound(M=M, inv_sqrt_bound=0.5 * field.a_H ** -1.5 * M,
                           fallback_used=field.derivative_fallback_used)
