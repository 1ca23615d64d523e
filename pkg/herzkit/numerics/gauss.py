"""Gauss rules and the adaptive panel integrator.

Panels carry a Gauss-Legendre rule of fixed order; the error of a panel is
estimated by comparing the rule on the whole panel with the rule on its two
halves. Endpoint singularities of the form |t - t0|^beta are absorbed with
Gauss-Jacobi rules.
"""

import heapq
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

from herzkit.exceptions import QuadratureNotConvergedError


Integrand = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=64)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the Gauss-Legendre rule on [-1, 1]."""
    x, w = leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=256)
def gauss_jacobi(order: int, alpha: float, beta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for the weight (1 - x)^alpha (1 + x)^beta on [-1, 1]."""
    x, w = roots_jacobi(order, alpha, beta)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_nodes(a: float, b: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [a, b]."""
    x, w = gauss_legendre(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def composite_nodes(a: float, b: float, panels: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on ``panels`` equal sub-intervals of [a, b]."""
    edges = np.linspace(a, b, panels + 1)
    x, w = gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    nodes = edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def _panel(func: Integrand, a: float, b: float, order: int) -> Tuple[float, float, float]:
    """Return (refined value, coarse-vs-refined error, midpoint)."""
    m = 0.5 * (a + b)
    x, w = panel_nodes(a, b, order)
    coarse = float(np.dot(w, func(x)))
    xl, wl = panel_nodes(a, m, order)
    xr, wr = panel_nodes(m, b, order)
    fine = float(np.dot(wl, func(xl)) + np.dot(wr, func(xr)))
    return fine, abs(fine - coarse), m


def adaptive_gauss(
    func: Integrand,
    a: float,
    b: float,
    rel_tol: float,
    budget: int,
    order: int = 20,
    abs_tol: float = 0.0,
) -> Tuple[float, float]:
    """Integrate ``func`` over [a, b] by adaptive bisection of Gauss panels.

    The panel with the largest error estimate is bisected until the summed
    estimate drops below ``max(rel_tol * |value|, abs_tol)``.

    Args:
        func: Vectorized integrand
        a: Lower limit
        b: Upper limit
        rel_tol: Relative tolerance
        budget: Maximum number of bisections
        order: Gauss-Legendre order per panel
        abs_tol: Absolute tolerance floor

    Returns:
        Tuple of (value, error estimate)

    Raises:
        QuadratureNotConvergedError: If the budget is exhausted
    """
    if b <= a:
        return 0.0, 0.0
    value, err, m = _panel(func, a, b, order)
    heap = [(-err, a, b, value, err)]
    total, total_err = value, err
    splits = 0
    while total_err > max(rel_tol * abs(total), abs_tol):
        if splits >= budget:
            raise QuadratureNotConvergedError(total, total_err, splits)
        _, pa, pb, pval, perr = heapq.heappop(heap)
        pm = 0.5 * (pa + pb)
        left = _panel(func, pa, pm, order)
        right = _panel(func, pm, pb, order)
        heapq.heappush(heap, (-left[1], pa, pm, left[0], left[1]))
        heapq.heappush(heap, (-right[1], pm, pb, right[0], right[1]))
        splits += 1
        # Re-sum instead of updating incrementally to keep cancellation out of the estimate
        total = float(np.sum([item[3] for item in heap]))
        total_err = float(np.sum([item[4] for item in heap]))
    return total, total_err


def jacobi_endpoint(
    func: Integrand,
    a: float,
    b: float,
    beta: float,
    singular_at: str,
    order: int = 20,
) -> Tuple[float, float]:
    """Integrate a function behaving like |t - t0|^beta at one endpoint.

    ``func`` is the full integrand; it is divided by the singular factor at
    the Jacobi nodes, which never coincide with the endpoint.

    Args:
        func: Vectorized integrand
        a: Lower limit
        b: Upper limit
        beta: Exponent of the endpoint singularity (> -1)
        singular_at: "left" or "right"
        order: Number of Jacobi nodes

    Returns:
        Tuple of (value, error estimate from comparing two orders)
    """
    half = 0.5 * (b - a)

    def rule(nodes: int) -> float:
        if singular_at == "left":
            x, w = gauss_jacobi(nodes, 0.0, beta)
            t = a + half * (x + 1.0)
            dist = t - a
        else:
            x, w = gauss_jacobi(nodes, beta, 0.0)
            t = a + half * (x + 1.0)
            dist = b - t
        smooth = func(t) / np.power(dist, beta)
        return float(half ** (beta + 1.0) * np.dot(w, smooth))

    fine = rule(2 * order)
    coarse = rule(order)
    return fine, abs(fine - coarse)
