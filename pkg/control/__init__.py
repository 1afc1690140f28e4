from control.schemas import (
    ControlCost,
    DPPResidual,
    RateReport,
    RegularityEntry,
    RegularityReport,
    SimulationConfig,
    StabilityReport,
    ValueEstimate,
)
from control.problem import ControlProblem, reflected_ou_control, schedule, simulate_control, two_control
from control.value import cost, dpp_residual, path_costs, representative_states, value
from control.probes import (
    fit_slope,
    moment_bound_probe,
    penalization_rate_probe,
    stability_probe,
    value_rate_probe,
    value_regularity_probe,
)
from utils.errors import ConfigurationError

CONTROL_PROBLEMS = {
    "two_control": two_control,
    "reflected_ou": reflected_ou_control,
}


def build_control_problem(name: str, **params) -> ControlProblem:
    """Задача управления из библиотеки по имени из конфигурации эксперимента"""
    try:
        builder = CONTROL_PROBLEMS[name]
    except KeyError:
        raise ConfigurationError(f"неизвестная задача управления '{name}', доступны: "
                                 f"{', '.join(sorted(CONTROL_PROBLEMS))}", field="control.problem")
    try:
        return builder(**params)
    except TypeError as e:
        raise ConfigurationError(f"неверные параметры задачи '{name}': {e}", field="control.params")


__all__ = [
    "ControlCost", "DPPResidual", "RateReport", "RegularityEntry", "RegularityReport", "SimulationConfig",
    "StabilityReport", "ValueEstimate",
    "ControlProblem", "reflected_ou_control", "schedule", "simulate_control", "two_control",
    "cost", "dpp_residual", "path_costs", "representative_states", "value",
    "fit_slope", "moment_bound_probe", "penalization_rate_probe", "stability_probe", "value_rate_probe",
    "value_regularity_probe", "CONTROL_PROBLEMS", "build_control_problem",
]
