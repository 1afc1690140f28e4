from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class ConvergenceEntry(BaseModel):
    parameter: float
    distance: float
    stderr: float = 0.0


class ConvergenceReport(BaseModel):
    """Расстояния по лестнице параметра (ε или h) и признак монотонного убывания"""
    name: str
    parameter: str
    entries: List[ConvergenceEntry] = Field(default_factory=list)
    monotone: bool = True
    passed: bool = True
    details: Dict[str, Optional[float]] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)

    @property
    def distances(self) -> List[float]:
        return [e.distance for e in self.entries]

    def rows(self) -> List[list]:
        return [[e.parameter, e.distance, e.stderr] for e in self.entries]


class SolutionDiagnostics(BaseModel):
    """
    Проверки решения по траекториям:
    неравенство для пробных траекторий, допустимость, невязка уравнения,
    дополнительность и согласованность с нормальным конусом (для индикаторов).
    """
    scheme: str
    particles: int
    probes: int
    inequality_residual: float
    feasibility_residual: float
    equation_residual: float
    complementarity: Optional[float] = None
    normal_cone_residual: Optional[float] = None
    variation_consistent: bool
    tolerance: float
    feasibility_required: bool
    passed: bool

    def rows(self) -> List[list]:
        return [
            ["inequality", self.inequality_residual],
            ["feasibility", self.feasibility_residual],
            ["equation", self.equation_residual],
            ["complementarity", self.complementarity],
            ["normal_cone", self.normal_cone_residual],
            ["variation_consistent", int(self.variation_consistent)],
        ]
