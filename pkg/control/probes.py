"""
Эмпирические проверки скоростей и оценок: сходимость штрафной схемы по ε, скорость
|V_ε - V|, регулярность и устойчивость по начальным данным, ограниченность моментов.
"""
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import linregress

from config import settings
from control.problem import ControlProblem, schedule, simulate_control
from control.schemas import RateReport, RegularityEntry, RegularityReport, SimulationConfig, StabilityReport
from control.value import common_increments, value, value_on_grid
from dynamics.system import MVSystem
from logger_config import logger
from measures import second_moment_sup
from mvsolver import (
    ConvergenceEntry,
    NoiseSource,
    TimeGrid,
    check_stability,
    mean_and_stderr,
    run_replications,
    simulate_penalized,
    simulate_projected,
    sup_distance_squared,
)
from utils.errors import ConfigurationError

# Отношение масштабов возмущений, на котором проверяется ограниченность отношения Гёльдера
REGULARITY_SCALE_FACTOR = 3.0


def _ladder(eps_ladder: Sequence[float]) -> List[float]:
    ladder = sorted({float(e) for e in eps_ladder}, reverse=True)
    if len(ladder) < 3:
        raise ConfigurationError(f"для оценки наклона нужно ≥ 3 значений ε, получено {len(ladder)}",
                                 field="epsilon")
    if ladder[-1] <= 0:
        raise ConfigurationError("значения ε должны быть положительными", field="epsilon")
    return ladder


def fit_slope(x: Sequence[float], y: Sequence[float]) -> Optional[Tuple[float, float, float]]:
    """(наклон, сдвиг, R²) для log y ~ log x; None при неположительных значениях или вырожденных данных"""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 3 or np.ptp(np.log(x[keep])) == 0:
        return None
    fit = linregress(np.log(x[keep]), np.log(y[keep]))
    return float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2)


def _control_schedule(prob: ControlProblem, steps: int, control: Optional[Sequence[Any]]) -> List[Any]:
    return schedule(list(control) if control is not None else [prob.controls[0]], steps)


def penalization_rate_probe(prob: ControlProblem, eps_ladder: Sequence[float], sim: SimulationConfig,
                            control: Optional[Sequence[Any]] = None,
                            slope_range: Tuple[float, float] = (0.7, 1.3), min_r2: float = 0.9) -> RateReport:
    """
    E sup|x^ε - x^{ε'}|² для соседних ε > ε' лестницы (общий шум) против ε + ε';
    ожидаемый наклон 1.
    """
    ladder = _ladder(eps_ladder)
    system = prob.system
    grid = prob.grid(sim.steps)
    for eps in ladder:
        check_stability(system, eps, grid)
    controls = _control_schedule(prob, grid.steps, control)
    increments = common_increments(prob, sim, grid)

    def task(r: int):
        noise = NoiseSource(sim.seed, r)
        paths = [simulate_penalized(system, eps, grid, sim.particles, noise, controls, increments[r])
                 for eps in ladder]
        return [sup_distance_squared([a], [b]) for a, b in zip(paths, paths[1:])]

    results = run_replications(task, sim.replications, sim.threads)
    entries = []
    for i, (a, b) in enumerate(zip(ladder, ladder[1:])):
        distance, stderr = mean_and_stderr(np.concatenate([r[i] for r in results]))
        entries.append(ConvergenceEntry(parameter=a + b, distance=distance, stderr=stderr))
    return _rate_report("penalization_rate", "eps_sum", entries, predicted=1.0,
                        accept=lambda s, r2: slope_range[0] <= s <= slope_range[1] and r2 >= min_r2)


def _rate_report(name: str, parameter: str, entries: List[ConvergenceEntry], predicted: float, accept,
                 floor: Optional[float] = None) -> RateReport:
    notes = []
    distances = np.array([e.distance for e in entries])
    degenerate = bool(np.all(distances <= settings.tolerances.composite))
    usable = [e for e in entries if floor is None or e.distance > floor]
    floor_flagged = floor is not None and len(usable) < len(entries)
    if floor_flagged:
        notes.append(f"{len(entries) - len(usable)} точек лестницы не выше погрешности квадратуры {floor:.3e}")
    if len(usable) < 3:
        usable = entries
    fit = None if degenerate else fit_slope([e.parameter for e in usable], [e.distance for e in usable])
    if fit is None:
        degenerate = True
        notes.append("расстояния на уровне шума: наклон не оценивается")
        slope = intercept = r2 = None
        passed = False
    else:
        slope, intercept, r2 = fit
        passed = bool(accept(slope, r2))
    status = "✅" if passed else "⚠️"
    logger.info(f"{status} {name}: наклон {slope if slope is None else round(slope, 3)}, "
                f"R² {r2 if r2 is None else round(r2, 3)} (ожидается {predicted:g})")
    return RateReport(name=name, parameter=parameter, entries=entries, slope=slope, intercept=intercept,
                      r_squared=r2, predicted_slope=predicted, degenerate=degenerate, floor=floor,
                      floor_flagged=floor_flagged, passed=passed, notes=notes)


def value_rate_probe(prob: ControlProblem, eps_ladder: Sequence[float], sim: SimulationConfig,
                     min_slope: float = 0.35, min_r2: float = 0.8) -> RateReport:
    """
    |V_ε - V| против ε, V - по проекционной схеме. Погрешность квадратуры оценивается
    разностью V на сетках h и h/2 с одним броуновским путём.
    """
    ladder = _ladder(eps_ladder)
    resolution = 2 * sim.steps
    projected = sim.projected()
    reference = value(prob, projected, resolution=resolution)
    refined = value(prob, projected.model_copy(update={"steps": resolution}), resolution=resolution)
    floor = abs(refined.value - reference.value)

    entries = []
    for eps in ladder:
        v_eps = value(prob, sim.penalized(eps), resolution=resolution)
        entries.append(ConvergenceEntry(parameter=eps, distance=abs(v_eps.value - reference.value),
                                        stderr=float(np.hypot(v_eps.mc_stderr, reference.mc_stderr))))
    report = _rate_report("value_rate", "epsilon", entries, predicted=0.5, floor=floor,
                          accept=lambda s, r2: s >= min_slope and r2 >= min_r2)
    if all(e.distance == 0.0 for e in entries):
        report.notes.append("V_ε = V на всей лестнице")
    return report


def _scale(dx: float, ds: float) -> float:
    return abs(dx) + np.sqrt(abs(ds))


def value_regularity_probe(prob: ControlProblem, perturbations: Sequence[Tuple[float, float]],
                           sim: SimulationConfig) -> RegularityReport:
    """
    |V(s, x₀) - V(s + Δs, x₀ + Δx·𝟙)| / (|Δx| + |Δs|^{1/2}) при общем шуме.
    Сдвинутый старт берётся в узле общей сетки: тот же шаг h и хвост тех же ΔB.
    Отношение не должно расти при уменьшении возмущений: сравниваются наибольшие отношения
    на наименьшем и наибольшем масштабах (допуск 3× плюс шум Монте-Карло).
    """
    grid = prob.grid(sim.steps)
    increments = common_increments(prob, sim, grid)
    base = value_on_grid(prob, sim, grid, increments)
    entries, notes = [], []
    for dx, ds in perturbations:
        if ds < 0:
            raise ConfigurationError("сдвиг начального момента должен быть неотрицательным", field="perturbations")
        shift = grid.index_of(grid.start + ds) if grid.start + ds < grid.end else grid.steps
        if shift >= grid.steps:
            raise ConfigurationError(f"сдвиг Δs = {ds} выводит начало за T = {grid.end}", field="perturbations")
        if abs(shift * grid.h - ds) > settings.tolerances.arithmetic:
            notes.append(f"Δs = {ds} округлён до {shift * grid.h:g}")
        ds = shift * grid.h
        scale = _scale(dx, ds)
        if scale == 0:
            entries.append(RegularityEntry(dx=dx, ds=ds, scale=0.0, delta_value=0.0, ratio=0.0, stderr=0.0))
            continue
        start = float(grid.nodes[shift])
        moved = value_on_grid(prob.restart(start=start, x0=prob.x0 + dx), sim,
                              TimeGrid(start, grid.end, grid.steps - shift), [dB[:, shift:] for dB in increments])
        delta = abs(moved.value - base.value)
        stderr = float(np.hypot(moved.mc_stderr, base.mc_stderr))
        entries.append(RegularityEntry(dx=dx, ds=ds, scale=scale, delta_value=delta, ratio=delta / scale,
                                       stderr=stderr / scale))

    active = [e for e in entries if e.scale > 0]
    max_ratio = max((e.ratio for e in active), default=0.0)
    scale_ratio, allowance, passed = None, 0.0, bool(np.isfinite(base.value))
    if active:
        smallest = min(e.scale for e in active)
        largest = max(e.scale for e in active)
        if largest >= REGULARITY_SCALE_FACTOR * smallest:
            small = [e for e in active if e.scale <= smallest * (1 + 1e-12)]
            large = [e for e in active if e.scale >= largest * (1 - 1e-12)]
            r_small = max(e.ratio for e in small)
            r_large = max(e.ratio for e in large)
            allowance = 3.0 * max(e.stderr for e in small)
            scale_ratio = r_small / r_large if r_large > 0 else None
            passed = passed and r_small <= 3.0 * r_large + allowance
    logger.info(f"{'✅' if passed else '❌'} Регулярность V: max |ΔV|/(|Δx| + |Δs|^½) = {max_ratio:.4g}")
    return RegularityReport(value=base.value, value_stderr=base.mc_stderr, entries=entries, max_ratio=max_ratio,
                            scale_ratio=scale_ratio, allowance=allowance, passed=passed, notes=notes)


def stability_probe(prob: ControlProblem, perturbations: Sequence[Tuple[float, float]], sim: SimulationConfig,
                    control: Optional[Sequence[Any]] = None) -> StabilityReport:
    """
    E sup_{r ≥ s∨s'} |x^{s,x₀}(r) - x^{s',x₀'}(r)|² / (|x₀ - x₀'|² + |s - s'|) при общем шуме.
    Сдвиг Δs ≥ 0 округляется до узла сетки.
    """
    grid = prob.grid(sim.steps)
    controls = _control_schedule(prob, grid.steps, control)
    increments = common_increments(prob, sim, grid)
    notes, entries = [], []
    for dx, ds in perturbations:
        if ds < 0:
            raise ConfigurationError("сдвиг начального момента должен быть неотрицательным", field="perturbations")
        shift = grid.index_of(grid.start + ds)
        if shift >= grid.steps:
            raise ConfigurationError(f"сдвиг Δs = {ds} выводит начало за T", field="perturbations")
        if abs(shift * grid.h - ds) > settings.tolerances.arithmetic:
            notes.append(f"Δs = {ds} округлён до {shift * grid.h:g}")
        moved = prob.restart(start=float(grid.nodes[shift]), x0=prob.x0 + dx)
        moved_grid = TimeGrid(float(grid.nodes[shift]), grid.end, grid.steps - shift)
        squared = []
        for r, dB in enumerate(increments):
            a = simulate_control(prob, controls, sim, grid, r, increments=dB)
            b = simulate_control(moved, controls[shift:], sim, moved_grid, r, increments=dB[:, shift:])
            diff = a.states[:, shift:] - b.states
            squared.append(np.max(np.sum(diff ** 2, axis=2), axis=1))
        denom = dx ** 2 * prob.dim + shift * grid.h
        distance, stderr = mean_and_stderr(np.concatenate(squared))
        ratio = distance / denom if denom > 0 else 0.0
        entries.append(ConvergenceEntry(parameter=denom, distance=ratio, stderr=stderr / denom if denom > 0 else 0.0))
    statistic = max((e.distance for e in entries), default=0.0)
    passed = bool(np.isfinite(statistic))
    logger.info(f"{'✅' if passed else '❌'} Устойчивость по начальным данным: max отношение {statistic:.4g}")
    return StabilityReport(name="stability", parameter="perturbation", entries=entries, statistic=statistic,
                           passed=passed, notes=notes)


def moment_bound_probe(target: Union[ControlProblem, MVSystem], eps_ladder: Sequence[float], sim: SimulationConfig,
                       control: Optional[Sequence[Any]] = None, refine: bool = False,
                       threshold: float = 0.25, refine_threshold: float = 0.10) -> StabilityReport:
    """
    E sup|x^ε|² + E∫|∇Π_ε(x^ε)|²dt для каждого ε и его относительный разброс (max - min)/среднее.
    refine=True добавляет изменение E sup|x|² проекционной схемы между сетками h и h/2.
    """
    ladder = _ladder(eps_ladder)
    problem = target if isinstance(target, ControlProblem) else None
    system = problem.system if problem is not None else target
    horizon = problem.horizon if problem is not None else (0.0, 1.0)

    def controls_for(steps: int):
        return _control_schedule(problem, steps, control) if problem is not None else None

    grid = TimeGrid(*horizon, sim.steps)
    for eps in ladder:
        check_stability(system, eps, grid)

    def task(r: int):
        noise = NoiseSource(sim.seed, r)
        dB = noise.increments(grid.steps, sim.particles, system.noise_dim, grid.h)
        values = []
        for eps in ladder:
            path = simulate_penalized(system, eps, grid, sim.particles, noise, controls_for(grid.steps), dB)
            energy = np.sum(np.sum(path.density ** 2, axis=2), axis=1) * grid.h
            values.append(np.max(np.sum(path.states ** 2, axis=2), axis=1) + energy)
        return values

    results = run_replications(task, sim.replications, sim.threads)
    entries = []
    for i, eps in enumerate(ladder):
        estimate, stderr = mean_and_stderr(np.concatenate([r[i] for r in results]))
        entries.append(ConvergenceEntry(parameter=eps, distance=estimate, stderr=stderr))
    values = np.array([e.distance for e in entries])
    variation = float(np.ptp(values) / values.mean()) if values.mean() > 0 else 0.0
    passed = variation < threshold
    details = {"variation": variation}

    if refine:
        moments = []
        for steps in (sim.steps, 2 * sim.steps):
            fine = TimeGrid(*horizon, steps)
            ensembles = []
            for r in range(sim.replications):
                noise = NoiseSource(sim.seed, r)
                dB = noise.increments(steps, sim.particles, system.noise_dim, fine.h, 2 * sim.steps)
                ensembles.append(simulate_projected(system, fine, sim.particles, noise, controls_for(steps), dB))
            moments.append(second_moment_sup(ensembles))
        change = abs(moments[1] - moments[0]) / moments[1] if moments[1] > 0 else 0.0
        details.update({"moment_h": moments[0], "moment_h2": moments[1], "refinement_change": change})
        passed = passed and change < refine_threshold

    logger.info(f"{'✅' if passed else '❌'} Ограниченность моментов по ε: разброс {variation:.3f}")
    return StabilityReport(name="moment_bound", parameter="epsilon", entries=entries, statistic=variation,
                           threshold=threshold, passed=passed, details=details)
