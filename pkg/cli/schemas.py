"""
Схема конфигурации эксперимента. Неизвестные ключи отклоняются на всех уровнях.
"""
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from control import build_control_problem
from dynamics import build_system
from mvsolver import TimeGrid, check_stability

Mode = Literal["simulate", "converge", "control", "validate", "transform-demo", "properties"]
ControlProbe = Literal["value", "dpp", "penalization_rate", "value_rate", "regularity", "stability", "moment"]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ConstraintConfig(StrictModel):
    kind: Literal["indicator", "smooth", "sum"] = "indicator"
    geometry: Optional[Literal["half-space", "box", "ball", "intersection"]] = None
    params: Dict[str, Any] = Field(default_factory=dict)
    # матрица Q гладкой части ½xᵀQx
    quadratic: Optional[List[List[float]]] = None

    @model_validator(mode="after")
    def check_parts(self):
        if self.kind in ("indicator", "sum") and self.geometry is None:
            raise ValueError(f"для типа '{self.kind}' нужна геометрия")
        if self.kind in ("smooth", "sum") and self.quadratic is None:
            raise ValueError(f"для типа '{self.kind}' нужна матрица quadratic")
        return self


class SystemConfig(StrictModel):
    name: str = "reflected_bm"
    params: Dict[str, Any] = Field(default_factory=dict)
    constraint: Optional[ConstraintConfig] = None


class GridConfig(StrictModel):
    steps: int = Field(256, ge=1)
    horizon: Tuple[float, float] = (0.0, 1.0)
    dyadic_level: Optional[int] = Field(None, ge=0)

    @model_validator(mode="after")
    def check_horizon(self):
        if not self.horizon[0] < self.horizon[1]:
            raise ValueError("нужно start < end")
        return self


class CertificateConfig(StrictModel):
    anchor: List[float]
    radius: float = Field(gt=0)


class ControlConfig(StrictModel):
    problem: str = "two_control"
    params: Dict[str, Any] = Field(default_factory=dict)
    switches: int = Field(0, ge=0)
    tau: Optional[float] = None
    probes: List[ControlProbe] = Field(default_factory=lambda: ["value"])
    perturbations: List[Tuple[float, float]] = Field(default_factory=list)
    inner_particles: int = Field(64, ge=1)
    clusters: int = Field(8, ge=1)


class TimedepConfig(StrictModel):
    problem: Literal["interval", "ball"] = "interval"
    family: Literal["affine", "exponential", "rotation-scaled", "constant"] = "affine"
    params: Dict[str, Any] = Field(default_factory=dict)
    steps_ladder: List[int] = Field(default_factory=lambda: [256, 512, 1024])
    # поправка только в сносе со знаком цепного правила вместо формулы с H'x̄ в сносе и диффузии
    drift_only_correction: bool = False


class PropertiesConfig(StrictModel):
    epsilons: List[float] = Field(default_factory=lambda: [0.1, 0.01, 0.001])
    samples: int = Field(200, ge=1)
    scale: float = Field(2.0, gt=0)


class ExperimentConfig(StrictModel):
    mode: Mode
    system: SystemConfig = Field(default_factory=SystemConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    particles: int = Field(256, ge=1)
    replications: int = Field(1, ge=1)
    epsilon: List[float] = Field(default_factory=list)
    scheme: Literal["projected", "penalized", "both"] = "projected"
    iterations: Optional[int] = Field(None, ge=1)
    seed: int = Field(42, ge=0, lt=2 ** 64)
    output: str = "results"
    threads: Optional[int] = Field(None, ge=1)
    samples: int = Field(2000, ge=1)
    certificate: Optional[CertificateConfig] = None
    control: ControlConfig = Field(default_factory=ControlConfig)
    timedep: TimedepConfig = Field(default_factory=TimedepConfig)
    properties: PropertiesConfig = Field(default_factory=PropertiesConfig)

    @model_validator(mode="after")
    def check_mode(self):
        if any(e <= 0 for e in self.epsilon):
            raise ValueError("значения epsilon должны быть положительными")
        if self.mode == "converge" and len(set(self.epsilon)) < 3:
            raise ValueError("для режима converge нужна лестница epsilon из ≥ 3 значений")
        if self.scheme in ("penalized", "both") and self.mode == "simulate" and not self.epsilon:
            raise ValueError("для штрафной схемы нужно задать epsilon")
        if self.mode == "control":
            needs_ladder = {"penalization_rate", "value_rate", "moment"} & set(self.control.probes)
            if needs_ladder and len(set(self.epsilon)) < 3:
                raise ValueError(f"пробам {sorted(needs_ladder)} нужна лестница epsilon из ≥ 3 значений")
            if "dpp" in self.control.probes and self.control.tau is None:
                raise ValueError("для пробы dpp нужно задать control.tau")
        return self

    @model_validator(mode="after")
    def check_penalized_stability(self):
        """h ≤ ε/(2·b_H) для наименьшего ε, если режим запускает штрафную схему"""
        if not self.epsilon:
            return self
        eps = min(self.epsilon)
        if self.mode == "converge" or (self.mode == "simulate" and self.scheme in ("penalized", "both")):
            system = build_system(self.system.name, None, **self.system.params)
            check_stability(system, eps, TimeGrid(*self.grid.horizon, self.grid.steps))
        elif self.mode == "control" and {"penalization_rate", "value_rate", "moment"} & set(self.control.probes):
            params = dict(self.control.params)
            params.setdefault("horizon", self.grid.horizon)
            prob = build_control_problem(self.control.problem, **params)
            check_stability(prob.system, eps, prob.grid(self.grid.steps))
        return self
