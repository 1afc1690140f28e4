from measures.empirical import (
    EmpiricalMeasure,
    assignment_cost,
    dirac,
    measure_from_csv,
    measure_to_csv,
    second_moment_sup,
    w2_to_origin,
    wasserstein2,
)

__all__ = [
    "EmpiricalMeasure", "assignment_cost", "dirac", "measure_from_csv", "measure_to_csv", "second_moment_sup",
    "w2_to_origin", "wasserstein2",
]
