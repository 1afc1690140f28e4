"""
Иерархия исключений проекта.
Каждый класс несёт exit_code, который CLI возвращает как код завершения.
"""
from typing import Optional


class ObliqueMVError(Exception):
    """Базовое исключение"""
    exit_code: int = 1

    def __init__(self, message: str, *, field: Optional[str] = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


# Ошибки конфигурации и входных данных (код 2)
class ConfigurationError(ObliqueMVError):
    exit_code = 2


class UnsupportedGeometryError(ConfigurationError):
    pass


class DomainError(ConfigurationError):
    pass


class CertificateError(ConfigurationError):
    pass


class ShapeError(ConfigurationError):
    pass


class UnsupportedInputError(ConfigurationError):
    pass


class BudgetError(ConfigurationError):
    pass


class ReductionError(ConfigurationError):
    pass


# Численные ошибки (код 3)
class NumericalError(ObliqueMVError):
    exit_code = 3


class InfeasibleSetError(NumericalError):
    pass


class SpectralError(NumericalError):
    def __init__(self, message: str, *, eigenvalue: Optional[float] = None, field: Optional[str] = None):
        self.eigenvalue = eigenvalue
        super().__init__(message, field=field)


class SkorohodStepError(NumericalError):
    def __init__(self, message: str, *, residual: float, step: Optional[int] = None):
        self.residual = residual
        self.step = step
        if step is not None:
            message = f"шаг {step}: {message}"
        super().__init__(f"{message} (невязка {residual:.3e})")


class DivergenceError(NumericalError):
    def __init__(self, message: str, *, step: int):
        self.step = step
        super().__init__(f"шаг {step}: {message}")


# Провал приёмочной проверки в режиме --strict (код 4)
class AcceptanceFailure(ObliqueMVError):
    exit_code = 4
