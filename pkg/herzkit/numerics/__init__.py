"""Quadrature building blocks: Gauss panels and sphere rules."""

from herzkit.numerics.gauss import (
    adaptive_gauss,
    composite_nodes,
    gauss_jacobi,
    gauss_legendre,
    jacobi_endpoint,
    panel_nodes,
)
from herzkit.numerics.sphere import (
    coordinate_moment,
    radial_sphere_mean,
    sphere_area,
    sphere_rule,
)

__all__ = [
    "adaptive_gauss",
    "composite_nodes",
    "gauss_jacobi",
    "gauss_legendre",
    "jacobi_endpoint",
    "panel_nodes",
    "coordinate_moment",
    "radial_sphere_mean",
    "sphere_area",
    "sphere_rule",
]
