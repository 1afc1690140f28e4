"""
Функционал стоимости, функция цены на конечном семействе управлений и невязка
принципа динамического программирования.
"""
from typing import Any, List, Optional, Sequence, Union

import numpy as np
from scipy.cluster.vq import kmeans2

from config import settings
from control.problem import ControlProblem, schedule, simulate_control
from control.schemas import ControlCost, DPPResidual, SimulationConfig, ValueEstimate
from dynamics.fields import CostField
from logger_config import logger
from mvsolver import NoiseSource, PathEnsemble, TimeGrid, mean_and_stderr, run_replications
from utils.errors import BudgetError, ConfigurationError

# Ключ потоков шума внутренних симуляций вложенного Монте-Карло
INNER_STREAM = 7


def path_costs(ensemble: PathEnsemble, costs: CostField, terminal: bool = True) -> np.ndarray:
    """∫ b(x, u)dt по формуле трапеций (+ α(x(T))) для каждой частицы"""
    grid = ensemble.grid
    steps = grid.steps
    running = np.empty((ensemble.particles, steps + 1))
    for k in range(steps + 1):
        running[:, k] = costs.running(ensemble.states[:, k], ensemble.controls[min(k, steps - 1)])
    weights = np.full(steps + 1, grid.h)
    weights[[0, -1]] = 0.5 * grid.h
    out = running @ weights
    if terminal:
        out = out + costs.terminal(ensemble.terminal())
    return out


def cost(ensembles: Union[PathEnsemble, Sequence[PathEnsemble]], costs: CostField) -> tuple[float, float]:
    """
    J = E[∫b dt + α(x(T))] и стандартная ошибка.
    При нескольких репликациях ошибка считается по средним репликаций (частицы одной репликации зависимы).
    """
    ensembles = [ensembles] if isinstance(ensembles, PathEnsemble) else list(ensembles)
    if not ensembles:
        raise ConfigurationError("нет траекторий для оценки стоимости", field="paths")
    values = [path_costs(e, costs) for e in ensembles]
    if len(values) == 1:
        return mean_and_stderr(values[0])
    estimate = float(np.mean(np.concatenate(values)))
    _, stderr = mean_and_stderr([v.mean() for v in values])
    return estimate, stderr


def common_increments(prob: ControlProblem, sim: SimulationConfig, grid: TimeGrid,
                      resolution: Optional[int] = None) -> List[np.ndarray]:
    """ΔB каждой репликации; одни и те же для всех управлений"""
    return [NoiseSource(sim.seed, r).increments(grid.steps, sim.particles, prob.coefficients.noise_dim, grid.h,
                                                resolution)
            for r in range(sim.replications)]


def _evaluate(prob: ControlProblem, sim: SimulationConfig, grid: TimeGrid, family: Sequence[Sequence[Any]],
              increments: List[np.ndarray], split: Optional[int] = None) -> List[ControlCost]:
    def task(i: int) -> ControlCost:
        sequence = list(family[i])
        if split is None:
            controls = schedule(sequence, grid.steps)
        else:
            half = len(sequence) // 2
            controls = schedule(sequence[:half], split) + schedule(sequence[half:], grid.steps - split)
        ensembles = [simulate_control(prob, controls, sim, grid, r, increments=dB) for r, dB in enumerate(increments)]
        estimate, stderr = cost(ensembles, prob.costs)
        return ControlCost(control=sequence, cost=estimate, stderr=stderr)

    return run_replications(task, len(family), sim.threads)


def _minimum(evaluated: List[ControlCost], sim: SimulationConfig) -> ValueEstimate:
    best = min(range(len(evaluated)), key=lambda i: evaluated[i].cost)
    return ValueEstimate(value=evaluated[best].cost, mc_stderr=evaluated[best].stderr, replications=sim.replications,
                         control=evaluated[best].control, scheme=sim.scheme, eps=sim.eps, evaluated=evaluated)


def value(prob: ControlProblem, sim: SimulationConfig, family: Optional[Sequence[Sequence[Any]]] = None,
          resolution: Optional[int] = None) -> ValueEstimate:
    """
    V(s, x₀) = min_u J(s, x₀; u) по кусочно-постоянным управлениям с sim.switches переключениями
    (для sim.scheme = "penalized" - V_ε). Все управления получают один и тот же шум.
    """
    grid = prob.grid(sim.steps)
    return value_on_grid(prob, sim, grid, common_increments(prob, sim, grid, resolution), family)


def value_on_grid(prob: ControlProblem, sim: SimulationConfig, grid: TimeGrid, increments: List[np.ndarray],
                  family: Optional[Sequence[Sequence[Any]]] = None) -> ValueEstimate:
    """V на заданной сетке с заданными ΔB репликаций (например, хвост общей сетки при старте в её узле)"""
    family = prob.control_family(sim.switches) if family is None else list(family)
    estimate = _minimum(_evaluate(prob, sim, grid, family, increments), sim)
    logger.debug(f"🔹 V{'_ε' if sim.scheme == 'penalized' else ''}({prob.horizon[0]:g}, {prob.x0.tolist()}) = "
                 f"{estimate.value:.6g} ± {estimate.mc_stderr:.2g}, управление {estimate.control}")
    return estimate


def representative_states(states: np.ndarray, clusters: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Центры k-means (k ≤ clusters) и номер ближайшего центра для каждого состояния"""
    unique, inverse = np.unique(states, axis=0, return_inverse=True)
    if len(unique) <= clusters:
        return unique, inverse.ravel()
    centroids, labels = kmeans2(states, clusters, seed=seed, minit="++")
    return centroids, labels


def _inner_seed(sim: SimulationConfig, replication: int, cluster: int) -> int:
    sequence = np.random.SeedSequence(sim.seed, spawn_key=(INNER_STREAM, replication, cluster))
    return int(sequence.generate_state(1, np.uint64)[0])


def dpp_residual(prob: ControlProblem, tau: float, sim: SimulationConfig) -> DPPResidual:
    """
    Левая часть - V(s, x₀) на семействе «управление на [s, τ] + управление на [τ, T]»;
    правая - min_u E[∫_s^τ b dt + V(τ, x(τ))], где V(τ, ·) оценивается внутренними симуляциями
    в центрах k-means выборки x(τ) и берётся в ближайшем центре.
    """
    s, T = prob.horizon
    grid = prob.grid(sim.steps)
    tol = 5.0 * grid.h
    if abs(tau - s) <= settings.tolerances.arithmetic:
        v = value(prob, sim)
        return DPPResidual(residual=0.0, stderr=v.mc_stderr, lhs=v.value, rhs=v.value, tau=s, clusters=0,
                           tolerance=tol, scheme=sim.scheme, passed=True)
    if not s < tau < T:
        raise ConfigurationError(f"нужно s ≤ τ < T, получено τ = {tau}", field="tau")
    split = grid.index_of(tau)
    if not 0 < split < grid.steps:
        raise ConfigurationError(f"τ = {tau} совпадает с концом сетки из {grid.steps} шагов", field="tau")
    tau_node = float(grid.nodes[split])

    family = prob.control_family(sim.switches)
    clusters = min(sim.clusters, settings.iteration.max_clusters)
    inner_steps = grid.steps - split
    budget = len(family) ** 2 * clusters * sim.inner_particles * inner_steps * sim.replications
    if budget > settings.runtime.nested_budget:
        raise BudgetError(f"вложенное моделирование требует {budget} шагов частиц > {settings.runtime.nested_budget}",
                          field="control.dpp")

    increments = common_increments(prob, sim, grid)
    lhs = _minimum(_evaluate(prob, sim, grid, [tuple(a) + tuple(b) for a in family for b in family], increments,
                             split=split), sim)

    outer_grid = TimeGrid(s, tau_node, split)
    restarted = prob.restart(start=tau_node)
    inner_sim = sim.model_copy(update={"steps": inner_steps, "particles": sim.inner_particles, "replications": 1,
                                    "threads": 1})

    def outer(i: int) -> ControlCost:
        controls = schedule(list(family[i]), split)
        totals = []
        for r, dB in enumerate(increments):
            ensemble = simulate_control(prob, controls, sim, outer_grid, r, increments=dB[:, :split])
            centroids, labels = representative_states(ensemble.terminal(), clusters, sim.seed)
            inner_values = np.array([
                value(restarted.restart(x0=c), inner_sim.model_copy(update={"seed": _inner_seed(sim, r, j)}),
                      family=family).value
                for j, c in enumerate(centroids)])
            totals.append(path_costs(ensemble, prob.costs, terminal=False) + inner_values[labels])
        if len(totals) == 1:
            estimate, stderr = mean_and_stderr(totals[0])
        else:
            estimate = float(np.mean(np.concatenate(totals)))
            stderr = mean_and_stderr([t.mean() for t in totals])[1]
        return ControlCost(control=list(family[i]), cost=estimate, stderr=stderr)

    rhs = _minimum(run_replications(outer, len(family), sim.threads), sim)
    residual = abs(lhs.value - rhs.value)
    stderr = float(np.hypot(lhs.mc_stderr, rhs.mc_stderr))
    passed = residual <= max(3.0 * stderr, tol)
    logger.info(f"{'✅' if passed else '❌'} Невязка DPP при τ = {tau_node:g}: {residual:.3e} "
                f"(σ = {stderr:.2e}, V = {lhs.value:.6g})")
    return DPPResidual(residual=residual, stderr=stderr, lhs=lhs.value, rhs=rhs.value, tau=tau_node,
                       clusters=clusters, tolerance=max(3.0 * stderr, tol), scheme=sim.scheme, passed=passed)
