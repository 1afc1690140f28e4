from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from mvsolver.schemas import ConvergenceEntry


class SimulationConfig(BaseModel):
    """Параметры моделирования для оценок стоимости и функции цены"""
    steps: int = Field(64, ge=1)
    particles: int = Field(256, ge=1)
    replications: int = Field(1, ge=1)
    seed: int = Field(42, ge=0)
    scheme: Literal["projected", "penalized"] = "projected"
    eps: Optional[float] = Field(None, gt=0)
    # число точек переключения кусочно-постоянного управления
    switches: int = Field(0, ge=0)
    threads: Optional[int] = Field(None, ge=1)
    clusters: int = Field(8, ge=1)
    inner_particles: int = Field(64, ge=1)

    @model_validator(mode="after")
    def check_eps(self):
        if self.scheme == "penalized" and self.eps is None:
            raise ValueError("для штрафной схемы нужно задать eps")
        return self

    def penalized(self, eps: float) -> "SimulationConfig":
        return self.model_copy(update={"scheme": "penalized", "eps": eps})

    def projected(self) -> "SimulationConfig":
        return self.model_copy(update={"scheme": "projected", "eps": None})


class ControlCost(BaseModel):
    control: List[Any]
    cost: float
    stderr: float


class ValueEstimate(BaseModel):
    """V(s, x₀) (или V_ε) как минимум стоимости по перебранному семейству управлений"""
    value: float
    mc_stderr: float = Field(ge=0)
    replications: int
    control: List[Any]
    scheme: str
    eps: Optional[float] = None
    evaluated: List[ControlCost] = Field(default_factory=list)


class DPPResidual(BaseModel):
    """|V(s, x₀) - inf_u E[∫_s^τ b dt + V(τ, x(τ))]| и объединённая стандартная ошибка"""
    residual: float
    stderr: float
    lhs: float
    rhs: float
    tau: float
    clusters: int
    tolerance: float
    scheme: str
    passed: bool


class RateReport(BaseModel):
    """Наклон прямой log(расстояние) ~ log(параметр) по лестнице ε"""
    name: str
    parameter: str
    entries: List[ConvergenceEntry] = Field(default_factory=list)
    slope: Optional[float] = None
    intercept: Optional[float] = None
    r_squared: Optional[float] = None
    predicted_slope: float
    degenerate: bool = False
    floor: Optional[float] = None
    floor_flagged: bool = False
    passed: bool
    notes: List[str] = Field(default_factory=list)

    def rows(self) -> List[list]:
        return [[e.parameter, e.distance, e.stderr] for e in self.entries]


class RegularityEntry(BaseModel):
    dx: float
    ds: float
    scale: float
    delta_value: float
    ratio: float
    stderr: float


class RegularityReport(BaseModel):
    """Отношения |ΔV|/(|Δx| + |Δs|^{1/2}) по возмущениям начальных данных"""
    value: float
    value_stderr: float
    entries: List[RegularityEntry] = Field(default_factory=list)
    max_ratio: float
    scale_ratio: Optional[float] = None
    allowance: float = 0.0
    passed: bool
    notes: List[str] = Field(default_factory=list)

    def rows(self) -> List[list]:
        return [[e.dx, e.ds, e.scale, e.delta_value, e.ratio, e.stderr] for e in self.entries]


class StabilityReport(BaseModel):
    """Оценки устойчивости: отношение к возмущению или относительный разброс по лестнице"""
    name: str
    parameter: str
    entries: List[ConvergenceEntry] = Field(default_factory=list)
    statistic: float
    threshold: Optional[float] = None
    passed: bool
    details: Dict[str, Optional[float]] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)

    def rows(self) -> List[list]:
        return [[e.parameter, e.distance, e.stderr] for e in self.entries]
