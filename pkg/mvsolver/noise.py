"""
Детерминированные приращения броуновского движения.

Поток каждой частицы порождается SeedSequence(seed, spawn_key=(replication, particle))
и генератором Philox, поэтому приращения не зависят от порядка вычислений и числа потоков.
"""
from typing import Optional

import numpy as np

from utils.errors import ConfigurationError


class NoiseSource:
    """Источник приращений ΔB для одной репликации"""

    def __init__(self, seed: int, replication: int = 0):
        if seed < 0 or seed >= 2 ** 64:
            raise ConfigurationError(f"зерно должно быть 64-битным неотрицательным, получено {seed}", field="seed")
        self.seed = int(seed)
        self.replication = int(replication)

    def stream(self, particle: int) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.replication, particle))
        return np.random.Generator(np.random.Philox(sequence))

    def standard(self, steps: int, particles: int, dim: int) -> np.ndarray:
        """Стандартные нормальные величины (particles, steps, dim)"""
        out = np.empty((particles, steps, dim))
        for i in range(particles):
            out[i] = self.stream(i).standard_normal((steps, dim))
        return out

    def increments(self, steps: int, particles: int, dim: int, h: float,
                   resolution: Optional[int] = None) -> np.ndarray:
        """
        ΔB формы (particles, steps, dim).
        resolution - число шагов базовой (более мелкой) сетки: приращения суммируются блоками,
        так что сетки разной подробности получают одну и ту же траекторию B.
        """
        if resolution is None or resolution == steps:
            return np.sqrt(h) * self.standard(steps, particles, dim)
        if resolution % steps:
            raise ConfigurationError(f"базовая сетка ({resolution} шагов) не кратна {steps}", field="grid.steps")
        factor = resolution // steps
        fine = np.sqrt(h / factor) * self.standard(resolution, particles, dim)
        return fine.reshape(particles, steps, factor, dim).sum(axis=2)

    def for_replication(self, replication: int) -> "NoiseSource":
        return NoiseSource(self.seed, replication)

    def __repr__(self):
        return f"NoiseSource(seed={self.seed}, replication={self.replication})"
