"""Geometric Cauchy problem for membrane shape equations.

Principal-frame exterior calculus, Cauchy data along space curves, strip
marching of the shape equation ``Delta H = Phi(a, c)`` and the elliptic
family of cylindrical membranes.
"""

from .cauchy import build_integral_curve, verify_integral_curve
from .curves import circle, ellipse, fourier_curve, helix, sampled_curve
from .cylinder import CylinderParams, closure_index, family_constants, separating_values, solve_phi, \
    synthesize_curve
from .elliptic import complete_K, jacobi_sncndn
from .exterior import curvature_coefficients
from .shape import ShapeModel
from .state import FiberPoint, FiberRow, InvariantViolation, MaterialParams, PrincipalPatch
from .strip import march, polar_derivatives, validate_patch

__version__ = "0.1.0"

__all__ = [
    "CylinderParams",
    "FiberPoint",
    "FiberRow",
    "InvariantViolation",
    "MaterialParams",
    "PrincipalPatch",
    "ShapeModel",
    "build_integral_curve",
    "circle",
    "closure_index",
    "complete_K",
    "curvature_coefficients",
    "ellipse",
    "family_constants",
    "fourier_curve",
    "helix",
    "jacobi_sncndn",
    "march",
    "polar_derivatives",
    "sampled_curve",
    "separating_values",
    "solve_phi",
    "synthesize_curve",
    "validate_patch",
    "verify_integral_curve",
]
