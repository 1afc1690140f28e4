from typing import Optional

import numpy as np

from utils.errors import ConfigurationError


class TimeGrid:
    """
    Равномерная сетка на [start, end] с шагом h = (end - start)/steps.
    dyadic_level n задаёт привязку t_n = 2^{-n}⌊2^n t⌋ для замороженных коэффициентов.
    """

    def __init__(self, start: float, end: float, steps: int, dyadic_level: Optional[int] = None):
        if not end > start:
            raise ConfigurationError(f"нужно start < end (start={start}, end={end})", field="grid.horizon")
        if steps < 1:
            raise ConfigurationError(f"число шагов должно быть ≥ 1, получено {steps}", field="grid.steps")
        if dyadic_level is not None and dyadic_level < 0:
            raise ConfigurationError(f"уровень двоичной сетки ≥ 0, получено {dyadic_level}", field="grid.dyadic_level")
        self.start = float(start)
        self.end = float(end)
        self.steps = int(steps)
        self.dyadic_level = dyadic_level
        self.h = (self.end - self.start) / self.steps
        # start + k·h точно для двоичных шагов
        self.nodes = self.start + self.h * np.arange(self.steps + 1)

    @property
    def horizon(self) -> float:
        return self.end - self.start

    def refine(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.start, self.end, self.steps * factor, self.dyadic_level)

    def with_start(self, start: float) -> "TimeGrid":
        """Та же сетка по числу шагов на [start, end]"""
        return TimeGrid(start, self.end, self.steps, self.dyadic_level)

    def snap(self, t, level: Optional[int] = None):
        """t_n = 2^{-n}⌊2^n t⌋"""
        level = self.dyadic_level if level is None else level
        if level is None:
            raise ConfigurationError("уровень двоичной сетки не задан", field="grid.dyadic_level")
        scale = 2.0 ** level
        return np.floor(np.asarray(t, dtype=float) * scale) / scale

    def snap_index(self, k: int, level: Optional[int] = None) -> int:
        """Индекс последнего узла сетки, не превосходящего t_n(t_k); не меньше 0"""
        t_snap = float(self.snap(self.nodes[k], level))
        if t_snap <= self.start:
            return 0
        idx = int(np.floor((t_snap - self.start) / self.h + 1e-9))
        return min(idx, k)

    def index_of(self, t: float) -> int:
        """Ближайший узел к t"""
        if not self.start - 1e-12 <= t <= self.end + 1e-12:
            raise ConfigurationError(f"момент {t} вне [{self.start}, {self.end}]", field="tau")
        return int(round((t - self.start) / self.h))

    def __repr__(self):
        return f"TimeGrid([{self.start}, {self.end}], steps={self.steps}, h={self.h:.6g}, n={self.dyadic_level})"
