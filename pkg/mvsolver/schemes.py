"""
Схемы аппроксимации уравнения со средним полем:
    штрафная - явный Эйлер-Маруяма для dx + H∇Π_ε(x)dt = f dt + g dB;
    проекционная - свободный шаг Эйлера и шаг Скорохода с H в левом конце шага;
    итерация с замороженными коэффициентами на двоичной сетке.
μ_k - эмпирическая мера всех частиц ансамбля на шаге k.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, List, Optional, Sequence, TypeVar

import numpy as np

from config import settings
from dynamics.system import MVSystem
from logger_config import logger
from measures import EmpiricalMeasure
from mvsolver.grid import TimeGrid
from mvsolver.noise import NoiseSource
from mvsolver.paths import PathEnsemble, sup_distance_squared
from mvsolver.schemas import ConvergenceEntry, ConvergenceReport
from mvsolver.skorohod import skorohod_points
from utils.errors import ConfigurationError, DivergenceError, NumericalError

T = TypeVar("T")


def check_stability(system: MVSystem, eps: float, grid: TimeGrid):
    """Явная штрафная схема устойчива при h ≤ ε/(2·b_H)"""
    if not eps > 0:
        raise ConfigurationError(f"ε должно быть положительным, получено {eps}", field="epsilon")
    limit = eps / (2.0 * system.oblique.b_H)
    if grid.h > limit * (1 + 1e-12):
        raise ConfigurationError(
            f"шаг h = {grid.h:.6g} нарушает условие устойчивости h ≤ ε/(2·b_H) = {limit:.6g} "
            f"(ε = {eps:g}, b_H = {system.oblique.b_H:g})", field="grid.steps")


def control_schedule(controls: Optional[Sequence[Any]], steps: int) -> List[Any]:
    if controls is None:
        return [None] * steps
    controls = list(controls)
    if len(controls) != steps:
        raise ConfigurationError(f"управлений {len(controls)}, а шагов {steps}", field="controls")
    return controls


def brownian_increments(system: MVSystem, grid: TimeGrid, particles: int, noise: NoiseSource,
                        resolution: Optional[int] = None) -> np.ndarray:
    return noise.increments(grid.steps, particles, system.noise_dim, grid.h, resolution)


def _prepare(system: MVSystem, grid: TimeGrid, particles: Optional[int], noise: Optional[NoiseSource],
             increments: Optional[np.ndarray]):
    particles = settings.runtime.particles if particles is None else particles
    if particles < 1:
        raise ConfigurationError(f"число частиц должно быть ≥ 1, получено {particles}", field="particles")
    noise = noise or NoiseSource(settings.runtime.seed)
    if increments is None:
        increments = brownian_increments(system, grid, particles, noise)
    expected = (particles, grid.steps, system.noise_dim)
    if increments.shape != expected:
        raise ConfigurationError(f"форма приращений {increments.shape}, ожидалась {expected}", field="noise")
    return particles, noise, increments


def _guard(x: np.ndarray, step: int):
    bound = settings.iteration.blowup_bound
    if not np.all(np.isfinite(x)) or np.abs(x).max() > bound:
        raise DivergenceError(f"|x| превысил {bound:g}", step=step)


def simulate_penalized(system: MVSystem, eps: float, grid: TimeGrid, particles: Optional[int] = None,
                       noise: Optional[NoiseSource] = None, controls: Optional[Sequence[Any]] = None,
                       increments: Optional[np.ndarray] = None) -> PathEnsemble:
    """
    x_{k+1} = x_k + h[f(x_k, μ_k, u_k) - H(x_k, μ_k, t_k)∇Π_ε(x_k)] + g(x_k, μ_k, u_k)ΔB_k,
    U_k = ∇Π_ε(x_k), Δk = U_k·h.
    """
    check_stability(system, eps, grid)
    particles, noise, dB = _prepare(system, grid, particles, noise, increments)
    schedule = control_schedule(controls, grid.steps)
    coefficients, constraint = system.coefficients, system.constraint

    states = np.empty((particles, grid.steps + 1, system.dim))
    dk = np.empty((particles, grid.steps, system.dim))
    x = np.broadcast_to(system.x0, (particles, system.dim)).copy()
    states[:, 0] = x
    h = grid.h
    for k in range(grid.steps):
        t, u = grid.nodes[k], schedule[k]
        mu = EmpiricalMeasure(x)
        grad = (x - constraint.resolvent_points(x, eps)) / eps
        H = system.oblique.evaluate(x, mu, t)
        drift = coefficients.drift(x, mu, u, t) - np.einsum("nij,nj->ni", H, grad)
        x = x + h * drift + np.einsum("nij,nj->ni", coefficients.diffusion(x, mu, u, t), dB[:, k])
        _guard(x, k + 1)
        states[:, k + 1] = x
        dk[:, k] = h * grad

    logger.debug(f"🔹 Штрафная схема ε = {eps:g}: {particles} частиц, {grid.steps} шагов, {noise}")
    return PathEnsemble(grid, states, dk, noise=dB, controls=schedule, scheme="penalized", eps=eps,
                        replication=noise.replication, constraint=constraint)


def simulate_projected(system: MVSystem, grid: TimeGrid, particles: Optional[int] = None,
                       noise: Optional[NoiseSource] = None, controls: Optional[Sequence[Any]] = None,
                       increments: Optional[np.ndarray] = None, frozen: Optional[PathEnsemble] = None,
                       level: Optional[int] = None) -> PathEnsemble:
    """
    y = x_k + h f + g ΔB_k;  x_{k+1} + H Δk_k = y, x_{k+1} ∈ K, Δk_k ∈ N_K(x_{k+1}).
    С frozen коэффициенты f, g, H берутся в (x'(t_n), μ'_{t_n}) ансамбля frozen, где t_n - двоичная
    привязка левого конца шага уровня level.
    """
    system.constraint.require_indicator("simulate_projected")
    system.require_feasible_start()
    particles, noise, dB = _prepare(system, grid, particles, noise, increments)
    schedule = control_schedule(controls, grid.steps)
    if frozen is not None:
        if frozen.states.shape != (particles, grid.steps + 1, system.dim):
            raise ConfigurationError("замороженный ансамбль не согласован с сеткой и числом частиц", field="frozen")
        level = grid.dyadic_level if level is None else level
    coefficients, constraint = system.coefficients, system.constraint

    states = np.empty((particles, grid.steps + 1, system.dim))
    dk = np.empty((particles, grid.steps, system.dim))
    x = np.broadcast_to(system.x0, (particles, system.dim)).copy()
    states[:, 0] = x
    h = grid.h
    frozen_index, frozen_mu = None, None
    for k in range(grid.steps):
        u = schedule[k]
        if frozen is None:
            at, t = x, grid.nodes[k]
            mu = EmpiricalMeasure(x)
        else:
            idx = grid.snap_index(k, level)
            at, t = frozen.states[:, idx], grid.nodes[idx]
            if idx != frozen_index:
                frozen_index, frozen_mu = idx, EmpiricalMeasure(at)
            mu = frozen_mu
        H = system.oblique.evaluate(at, mu, t)
        y = x + h * coefficients.drift(at, mu, u, t) + np.einsum("nij,nj->ni", coefficients.diffusion(at, mu, u, t),
                                                                  dB[:, k])
        _guard(y, k + 1)
        try:
            x, dk[:, k] = skorohod_points(constraint, H, y, step=k + 1)
        except NumericalError:
            logger.error(f"❌ Шаг Скорохода {k + 1} из {grid.steps} не выполнен")
            raise
        states[:, k + 1] = x

    logger.debug(f"🔹 Проекционная схема: {particles} частиц, {grid.steps} шагов, {noise}"
                 + (f", коэффициенты заморожены (n = {level})" if frozen is not None else ""))
    return PathEnsemble(grid, states, dk, noise=dB, controls=schedule, scheme="projected",
                        replication=noise.replication, constraint=constraint)


class EulerIterationResult:
    """Приближения x¹, ..., x^N и расстояния между соседними (E sup|xʲ - xʲ⁻¹|²)^{1/2}"""

    def __init__(self, iterates: List[PathEnsemble], distances: List[float], level: int):
        self.iterates = iterates
        self.distances = distances
        self.level = level

    @property
    def final(self) -> PathEnsemble:
        return self.iterates[-1]

    def is_cauchy(self, slack: float = 0.0) -> bool:
        """Расстояния не возрастают начиная со второго приближения"""
        tail = self.distances[1:]
        return all(b <= a * (1 + slack) + settings.tolerances.arithmetic for a, b in zip(tail, tail[1:]))


def euler_iteration(system: MVSystem, level: int, iterations: int, grid: TimeGrid,
                    particles: Optional[int] = None, noise: Optional[NoiseSource] = None) -> EulerIterationResult:
    """
    xʲ решает проекционную задачу с коэффициентами, замороженными в (xʲ⁻¹(t_n), μʲ⁻¹_{t_n});
    x⁰ ≡ x₀, μ⁰ = δ_{x₀}. Шум общий для всех приближений.
    """
    if iterations < 1:
        raise ConfigurationError(f"число итераций должно быть ≥ 1, получено {iterations}", field="iterations")
    particles, noise, dB = _prepare(system, grid, particles, noise, None)
    previous = PathEnsemble.constant(system.x0, grid, particles)
    iterates, distances = [], []
    for j in range(1, iterations + 1):
        current = simulate_projected(system, grid, particles, noise, increments=dB, frozen=previous, level=level)
        distances.append(float(np.sqrt(np.mean(sup_distance_squared([current], [previous])))))
        iterates.append(current)
        previous = current
        logger.debug(f"🔹 Итерация {j}: расстояние до предыдущей {distances[-1]:.6g}")
    return EulerIterationResult(iterates, distances, level)


def run_replications(task: Callable[[int], T], replications: int, threads: Optional[int] = None) -> List[T]:
    """Репликации в пуле потоков; результаты в порядке номеров репликаций"""
    threads = settings.runtime.threads if threads is None else threads
    if threads <= 1 or replications <= 1:
        return [task(r) for r in range(replications)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(task, range(replications)))


def mean_and_stderr(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=float).ravel()
    if len(values) < 2:
        return float(values.mean()), 0.0
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(len(values)))


def is_decreasing(values: Sequence[float], slack: float = 0.0) -> bool:
    return all(b <= a * (1 + slack) + settings.tolerances.arithmetic for a, b in zip(values, values[1:]))


def compare_schemes(system: MVSystem, eps_ladder: Sequence[float], grid: TimeGrid, particles: Optional[int] = None,
                    noise: Optional[NoiseSource] = None, replications: int = 1,
                    threads: Optional[int] = None) -> ConvergenceReport:
    """E sup|x^ε - x^proj|² для каждого ε лестницы при общем шуме"""
    eps_ladder = sorted((float(e) for e in eps_ladder), reverse=True)
    for eps in eps_ladder:
        check_stability(system, eps, grid)
    base = noise or NoiseSource(settings.runtime.seed)

    def task(r: int):
        source = base.for_replication(base.replication + r)
        n, _, dB = _prepare(system, grid, particles, source, None)
        reference = simulate_projected(system, grid, n, source, increments=dB)
        return [sup_distance_squared([simulate_penalized(system, eps, grid, n, source, increments=dB)], [reference])
                for eps in eps_ladder]

    results = run_replications(task, replications, threads)
    entries = []
    for i, eps in enumerate(eps_ladder):
        value, stderr = mean_and_stderr(np.concatenate([r[i] for r in results]))
        entries.append(ConvergenceEntry(parameter=eps, distance=value, stderr=stderr))
    monotone = is_decreasing([e.distance for e in entries])
    logger.info(f"{'✅' if monotone else '⚠️'} Сравнение схем: "
                + ", ".join(f"ε={e.parameter:g}: {e.distance:.3e}" for e in entries))
    return ConvergenceReport(name="compare_schemes", parameter="epsilon", entries=entries, monotone=monotone,
                             passed=monotone)
