"""Exact and numerical computations on filtered manifolds given by polynomial charts."""

from .chart import FilteredChart, ValidationReport, VectorField, lie_bracket, validate_lie_filtration, vanishing_h_order
from .coords import adapted_coordinates, is_carnot, model_euler_field, privileged_coordinates
from .nilpotent import GradedNilpotentLieAlgebra, bch_multiply, orbit_homomorphism, osculating_algebra
from .poly import Poly

__version__ = "0.1.0"

__all__ = [
    "FilteredChart",
    "GradedNilpotentLieAlgebra",
    "Poly",
    "ValidationReport",
    "VectorField",
    "adapted_coordinates",
    "bch_multiply",
    "is_carnot",
    "lie_bracket",
    "model_euler_field",
    "orbit_homomorphism",
    "osculating_algebra",
    "privileged_coordinates",
    "validate_lie_filtration",
    "vanishing_h_order",
]
