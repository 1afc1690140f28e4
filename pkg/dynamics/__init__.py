from dynamics.spectral import eigen_bounds, inv_sqrt_spd, inverse_spd, jacobi_eigh, spd_power, sqrt_spd
from dynamics.fields import CoefficientField, CostField, ObliqueField
from dynamics.system import MVSystem
from dynamics.schemas import DerivativeBound, ValidationReport
from dynamics.validators import (
    Sampler,
    derivative_bound,
    linear_growth_check,
    validate_cost,
    validate_lipschitz,
    validate_oblique,
)
from dynamics.library import SYSTEMS, build_system, half_line, time_oblique_field

__all__ = [
    "eigen_bounds", "inv_sqrt_spd", "inverse_spd", "jacobi_eigh", "spd_power", "sqrt_spd",
    "CoefficientField", "CostField", "ObliqueField", "MVSystem",
    "DerivativeBound", "ValidationReport",
    "Sampler", "derivative_bound", "linear_growth_check", "validate_cost", "validate_lipschitz", "validate_oblique",
    "SYSTEMS", "build_system", "half_line", "time_oblique_field",
]
