from convexcore.geometry import Ball, Box, Geometry, HalfSpace, Polytope, dykstra, make_geometry
from convexcore.constraint import ConvexConstraint, SmoothConvex, quadratic
from convexcore.yosida import project, resolvent, yosida_gradient, yosida_value, yosida_value_grid
from convexcore.diagnostics import (
    InteriorCertificate,
    check_yosida_properties,
    constants_verified,
    interior_constants,
    normal_cone_residual,
    normal_cone_residuals,
)
from convexcore.schemas import InteriorConstants, PropertyReport

__all__ = [
    "Ball", "Box", "Geometry", "HalfSpace", "Polytope", "dykstra", "make_geometry",
    "ConvexConstraint", "SmoothConvex", "quadratic",
    "project", "resolvent", "yosida_gradient", "yosida_value", "yosida_value_grid",
    "InteriorCertificate", "check_yosida_properties", "constants_verified", "interior_constants",
    "normal_cone_residual", "normal_cone_residuals",
    "InteriorConstants", "PropertyReport",
]
