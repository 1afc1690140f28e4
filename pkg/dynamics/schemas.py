from typing import Dict, List, NamedTuple, Optional

from pydantic import BaseModel, Field


class ValidationReport(BaseModel):
    """Результат эмпирической проверки предположений о коэффициентах"""
    check: str
    subject: str
    samples: int
    declared: Optional[float] = None
    estimate: Optional[float] = None
    passed: bool
    violations: List[str] = Field(default_factory=list)
    details: Dict[str, Optional[float]] = Field(default_factory=dict)

    def rows(self) -> List[list]:
        rows = [[self.check, "estimate", self.estimate], [self.check, "declared", self.declared]]
        rows += [[self.check, key, value] for key, value in self.details.items()]
        return rows


class DerivativeBound(NamedTuple):
    """M = sup|H'(t)| и оценка производной H^{-1/2}: ½·a_H^{-3/2}·M"""
    M: float
    inv_sqrt_bound: float
    fallback_used: bool
