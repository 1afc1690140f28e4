from typing import Dict, List, NamedTuple

from pydantic import BaseModel, Field


class PropertyResult(BaseModel):
    name: str
    description: str
    max_violation: float
    tolerance: float
    passed: bool


class PropertyReport(BaseModel):
    """Отчёт о свойствах (a)-(g) аппроксимации Моро-Иосиды"""
    constraint: str
    epsilons: List[float]
    samples: int
    closed_form: bool
    properties: Dict[str, PropertyResult] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.properties.values())

    def rows(self) -> List[list]:
        return [[key, p.max_violation, p.tolerance, int(p.passed)] for key, p in self.properties.items()]


class InteriorConstants(NamedTuple):
    lambda1: float
    lambda2: float
    lambda3: float
