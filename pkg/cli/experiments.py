"""
Режимы эксперимента: каждый строит объекты из конфигурации, считает и пишет CSV-таблицы в out.
"""
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple

import numpy as np
from pydantic import BaseModel

from cli.schemas import ConstraintConfig, ExperimentConfig
from control import (
    ControlProblem,
    SimulationConfig,
    build_control_problem,
    dpp_residual,
    moment_bound_probe,
    penalization_rate_probe,
    stability_probe,
    value,
    value_rate_probe,
    value_regularity_probe,
)
from control.probes import fit_slope
from convexcore import ConvexConstraint, InteriorCertificate, check_yosida_properties, make_geometry, quadratic
from dynamics import MVSystem, Sampler, build_system, derivative_bound, validate_lipschitz, validate_oblique
from logger_config import logger
from measures import second_moment_sup
from mvsolver import (
    NoiseSource,
    TimeGrid,
    compare_schemes,
    euler_iteration,
    interior_bound_check,
    residual_report,
    run_replications,
    save_trajectories,
    simulate_penalized,
    simulate_projected,
)
from timedep import build_moving_problem, equivalence_check
from utils.errors import ConfigurationError
from utils.utils import write_csv


class ModeResult(NamedTuple):
    passed: bool
    reports: Dict[str, BaseModel]
    outputs: List[Path]
    summary: Dict[str, object]


def build_constraint(cfg: ConstraintConfig) -> ConvexConstraint:
    try:
        geometry = make_geometry(cfg.geometry, **cfg.params) if cfg.geometry is not None else None
    except (TypeError, KeyError) as e:
        raise ConfigurationError(f"неверные параметры геометрии '{cfg.geometry}': {e}",
                                 field="system.constraint.params")
    smooth = quadratic(cfg.quadratic) if cfg.quadratic is not None else None
    return ConvexConstraint(cfg.kind, geometry=geometry, smooth=smooth)


def build_from_config(cfg: ExperimentConfig) -> MVSystem:
    constraint = build_constraint(cfg.system.constraint) if cfg.system.constraint is not None else None
    return build_system(cfg.system.name, constraint, **cfg.system.params)


def build_grid(cfg: ExperimentConfig) -> TimeGrid:
    return TimeGrid(*cfg.grid.horizon, cfg.grid.steps, cfg.grid.dyadic_level)


def run_simulate(cfg: ExperimentConfig, out: Path) -> ModeResult:
    system = build_from_config(cfg)
    grid = build_grid(cfg)
    schemes = ["projected", "penalized"] if cfg.scheme == "both" else [cfg.scheme]
    eps = min(cfg.epsilon) if cfg.epsilon else None
    reports, outputs, summary = {}, [], {}

    for scheme in schemes:
        def task(r: int):
            noise = NoiseSource(cfg.seed, r)
            if scheme == "penalized":
                return simulate_penalized(system, eps, grid, cfg.particles, noise)
            return simulate_projected(system, grid, cfg.particles, noise)

        ensembles = run_replications(task, cfg.replications, cfg.threads)
        outputs.append(save_trajectories(ensembles, out / f"trajectories_{scheme}.csv"))
        diagnostics = residual_report(ensembles[0], system)
        outputs.append(write_csv(out / f"diagnostics_{scheme}.csv", ["check", "value"], diagnostics.rows()))
        reports[f"diagnostics_{scheme}"] = diagnostics
        summary[f"second_moment_sup_{scheme}"] = second_moment_sup(ensembles)
        if cfg.certificate is not None and system.constraint.is_indicator:
            margin = interior_bound_check(ensembles, InteriorCertificate(cfg.certificate.anchor, cfg.certificate.radius))
            summary[f"interior_bound_margin_{scheme}"] = margin

    if cfg.iterations is not None:
        level = cfg.grid.dyadic_level if cfg.grid.dyadic_level is not None else 3
        result = euler_iteration(system, level, cfg.iterations, grid, cfg.particles, NoiseSource(cfg.seed))
        outputs.append(write_csv(out / "euler_iteration.csv", ["iteration", "distance"],
                                 ([j + 1, d] for j, d in enumerate(result.distances))))
        summary["euler_iteration_cauchy"] = result.is_cauchy()

    passed = all(r.passed for r in reports.values())
    return ModeResult(passed, reports, outputs, summary)


def run_converge(cfg: ExperimentConfig, out: Path) -> ModeResult:
    system = build_from_config(cfg)
    report = compare_schemes(system, cfg.epsilon, build_grid(cfg), cfg.particles, NoiseSource(cfg.seed),
                             cfg.replications, cfg.threads)
    fit = fit_slope([e.parameter for e in report.entries], report.distances)
    summary = {"slope": fit[0] if fit else None, "r_squared": fit[2] if fit else None}
    path = write_csv(out / "convergence.csv", ["epsilon", "distance", "stderr"], report.rows())
    return ModeResult(report.passed, {"convergence": report}, [path], summary)


def run_validate(cfg: ExperimentConfig, out: Path) -> ModeResult:
    system = build_from_config(cfg)
    sampler = Sampler(system.dim, seed=cfg.seed, horizon=cfg.grid.horizon)
    reports = {
        "lipschitz": validate_lipschitz(system.coefficients, sampler, pairs=cfg.samples),
        "oblique": validate_oblique(system.oblique, sampler, cfg.samples),
    }
    summary = {}
    if system.oblique.time_dependent:
        bound = derivative_bound(system.oblique, cfg.grid.horizon)
        summary.update({"derivative_bound": bound.M, "inv_sqrt_derivative_bound": bound.inv_sqrt_bound,
                        "derivative_fallback": bound.fallback_used})
    rows = [row for report in reports.values() for row in report.rows()]
    path = write_csv(out / "validation.csv", ["check", "quantity", "value"], rows)
    return ModeResult(all(r.passed for r in reports.values()), reports, [path], summary)


def run_properties(cfg: ExperimentConfig, out: Path) -> ModeResult:
    if cfg.system.constraint is not None:
        constraint = build_constraint(cfg.system.constraint)
    else:
        constraint = build_from_config(cfg).constraint
    rng = np.random.default_rng(cfg.seed)
    points = rng.uniform(-cfg.properties.scale, cfg.properties.scale, size=(cfg.properties.samples, constraint.dim))
    report = check_yosida_properties(constraint, cfg.properties.epsilons, points)
    path = write_csv(out / "properties.csv", ["property", "max_violation", "tolerance", "passed"], report.rows())
    return ModeResult(report.passed, {"properties": report}, [path], {"constraint": constraint.describe()})


def _control_problem(cfg: ExperimentConfig) -> ControlProblem:
    params = dict(cfg.control.params)
    params.setdefault("horizon", cfg.grid.horizon)
    return build_control_problem(cfg.control.problem, **params)


def run_control(cfg: ExperimentConfig, out: Path) -> ModeResult:
    prob = _control_problem(cfg)
    sim = SimulationConfig(steps=cfg.grid.steps, particles=cfg.particles, replications=cfg.replications,
                           seed=cfg.seed, switches=cfg.control.switches, threads=cfg.threads,
                           clusters=cfg.control.clusters, inner_particles=cfg.control.inner_particles)
    rate_header = ["parameter", "distance", "stderr"]
    reports, outputs, summary = {}, [], {}
    for probe in cfg.control.probes:
        if probe == "value":
            estimate = value(prob, sim)
            reports["value"] = estimate
            outputs.append(write_csv(out / "value.csv", ["control", "cost", "stderr"],
                                     ([" ".join(map(str, c.control)), c.cost, c.stderr] for c in estimate.evaluated)))
            summary["value"] = estimate.value
        elif probe == "dpp":
            reports["dpp"] = dpp_residual(prob, cfg.control.tau, sim)
        elif probe == "penalization_rate":
            reports[probe] = penalization_rate_probe(prob, cfg.epsilon, sim)
            outputs.append(write_csv(out / "rate_penalization.csv", rate_header, reports[probe].rows()))
        elif probe == "value_rate":
            reports[probe] = value_rate_probe(prob, cfg.epsilon, sim)
            outputs.append(write_csv(out / "rate_value.csv", rate_header, reports[probe].rows()))
        elif probe == "regularity":
            reports[probe] = value_regularity_probe(prob, cfg.control.perturbations, sim)
            outputs.append(write_csv(out / "regularity.csv", ["dx", "ds", "scale", "delta_value", "ratio", "stderr"],
                                     reports[probe].rows()))
        elif probe == "stability":
            reports[probe] = stability_probe(prob, cfg.control.perturbations, sim)
            outputs.append(write_csv(out / "stability.csv", rate_header, reports[probe].rows()))
        elif probe == "moment":
            reports[probe] = moment_bound_probe(prob, cfg.epsilon, sim)
            outputs.append(write_csv(out / "moment.csv", rate_header, reports[probe].rows()))
    passed = all(getattr(r, "passed", True) for r in reports.values())
    return ModeResult(passed, reports, outputs, summary)


def run_transform_demo(cfg: ExperimentConfig, out: Path) -> ModeResult:
    params = dict(cfg.timedep.params)
    prob = build_moving_problem(cfg.timedep.problem, family=cfg.timedep.family, horizon=cfg.grid.horizon, **params)
    correction = "drift-only" if cfg.timedep.drift_only_correction else "as-printed"
    report = equivalence_check(prob, cfg.timedep.steps_ladder, cfg.particles, NoiseSource(cfg.seed), correction,
                               cfg.replications, cfg.threads)
    path = write_csv(out / "equivalence.csv", ["h", "distance", "stderr"], report.rows())
    return ModeResult(report.passed, {"equivalence": report}, [path], {"correction": correction})


MODE_RUNNERS: Dict[str, Callable[[ExperimentConfig, Path], ModeResult]] = {
    "simulate": run_simulate,
    "converge": run_converge,
    "control": run_control,
    "validate": run_validate,
    "transform-demo": run_transform_demo,
    "properties": run_properties,
}


def execute(cfg: ExperimentConfig, out: Path) -> ModeResult:
    logger.info(f"🔹 Режим '{cfg.mode}', зерно {cfg.seed}, вывод в {out}")
    result = MODE_RUNNERS[cfg.mode](cfg, out)
    logger.success(f"{'✅' if result.passed else '⚠️'} Режим '{cfg.mode}' завершён: "
                   f"{len(result.outputs)} таблиц, проверки {'пройдены' if result.passed else 'не пройдены'}")
    return result
