"""Surface measure of spheres and quadrature rules on them."""

import math
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from scipy.special import gammaln

from herzkit.numerics.gauss import gauss_jacobi, gauss_legendre


def sphere_area(n: int) -> float:
    """Surface measure omega_{n-1} = 2 pi^{n/2} / Gamma(n/2) of S^{n-1}.

    Args:
        n: Ambient dimension (n >= 1); n = 1 gives the counting measure on {-1, 1}

    Returns:
        Area of the unit sphere in R^n
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def coordinate_moment(n: int, p: float) -> float:
    """Integral of |theta_1|^p over S^{n-1}.

    Used to turn the L^p mass of a radial profile into the mass of one
    partial derivative, since d_j f = phi'(r) x_j / r.
    """
    if n == 1:
        return 2.0
    log_value = (
        math.log(2.0)
        + 0.5 * (n - 1) * math.log(math.pi)
        + gammaln(0.5 * (p + 1.0))
        - gammaln(0.5 * (n + p))
    )
    return math.exp(log_value)


@lru_cache(maxsize=32)
def sphere_rule(n: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Unit directions and weights integrating over S^{n-1} (n <= 3).

    n = 1: the two points +-1; n = 2: trapezoid rule with 2*order angles;
    n = 3: Gauss-Legendre in cos(polar angle) times trapezoid in azimuth.
    Weights sum to ``sphere_area(n)``; the rules are symmetric under x -> -x.
    """
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
        weights = np.ones(2)
    elif n == 2:
        m = 2 * order
        theta = 2.0 * math.pi * np.arange(m) / m
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        weights = np.full(m, 2.0 * math.pi / m)
    elif n == 3:
        mu, wmu = gauss_legendre(order)
        m = 2 * order
        phi = 2.0 * math.pi * np.arange(m) / m
        s = np.sqrt(1.0 - mu ** 2)
        dirs = np.stack([
            np.outer(s, np.cos(phi)).ravel(),
            np.outer(s, np.sin(phi)).ravel(),
            np.repeat(mu, m),
        ], axis=1)
        weights = np.repeat(wmu, m) * (2.0 * math.pi / m)
    else:
        raise ValueError("sphere_rule supports n <= 3")
    dirs.setflags(write=False)
    weights.setflags(write=False)
    return dirs, weights


def radial_sphere_mean(
    profile: Callable[[np.ndarray], np.ndarray],
    r0: float,
    rho: np.ndarray,
    n: int,
    order: int = 24,
) -> np.ndarray:
    """Integral over |theta| = 1 of phi(|x + rho theta|) for a radial profile phi.

    Only |x| = r0 matters. For n >= 2 the angle between x and theta is
    integrated with a Gauss-Jacobi rule in t = cos(psi) against the weight
    (1 - t^2)^{(n-3)/2}; this works in any dimension.

    Args:
        profile: Vectorized radial profile phi(r)
        r0: |x|
        rho: Radii of the spheres (array)
        n: Ambient dimension
        order: Jacobi nodes

    Returns:
        Array of spherical integrals, same shape as ``rho``
    """
    rho = np.asarray(rho, dtype=float)
    if n == 1:
        return profile(np.abs(r0 + rho)) + profile(np.abs(r0 - rho))
    if r0 == 0.0:
        return sphere_area(n) * profile(np.abs(rho))
    expo = 0.5 * (n - 3)
    t, w = gauss_jacobi(order, expo, expo)
    radius = np.sqrt(np.maximum(r0 ** 2 + rho[..., None] ** 2 + 2.0 * r0 * rho[..., None] * t, 0.0))
    return sphere_area(n - 1) * np.sum(w * profile(radius), axis=-1)
