"""Evaluation, derivatives, dilation and support bookkeeping for test functions.

All evaluators are vectorized over an ``(N, n)`` array of points. The
single-point helpers ``evaluate`` and ``gradient`` validate the dimension
and delegate to them.
"""

import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import eval_hermite, expit

from herzkit.exceptions import (
    DimensionMismatchError,
    MissingDerivativeError,
    UndefinedGradientError,
    UnsupportedVariantError,
)
from herzkit.models.functions import (
    DecayHint,
    FiniteSum,
    GaussianSpec,
    RadialPowerLog,
    SampledGrid,
    SmoothBump,
    SmoothPlateau,
    SupportAnnuli,
)


Profile = Callable[[np.ndarray], np.ndarray]


def as_points(x, n: int) -> np.ndarray:
    """Coerce a point or an array of points to shape (N, n).

    Raises:
        DimensionMismatchError: If the trailing axis is not n
    """
    X = np.asarray(x, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n:
        raise DimensionMismatchError(n, int(X.shape[-1]) if X.ndim else 0)
    return X


def _offsets(center: Sequence[float], X: np.ndarray) -> np.ndarray:
    return X - np.asarray(center, dtype=float)[None, :]


# Radial profiles

def _rpl_profile(f: RadialPowerLog, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    mask = (r > f.r_lo) & (r < f.r_hi)
    rm = r[mask]
    val = f.amplitude * np.power(rm, f.a)
    if f.b != 0.0:
        L = np.abs(np.log(rm) + f.log_offset)
        # |log| = 0 is a null set; the value there is 0 for either sign of b
        safe = np.where(L > 0.0, L, 1.0)
        val = np.where(L > 0.0, val * np.power(safe, f.b), 0.0)
    out[mask] = val
    return out


def _rpl_slope(f: RadialPowerLog, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    mask = (r > f.r_lo) & (r < f.r_hi)
    rm = r[mask]
    if f.b == 0.0:
        out[mask] = f.amplitude * f.a * np.power(rm, f.a - 1.0)
        return out
    s = np.log(rm) + f.log_offset
    L = np.abs(s)
    safe = np.where(L > 0.0, L, 1.0)
    val = f.amplitude * np.power(rm, f.a - 1.0) * np.power(safe, f.b - 1.0) * (
        f.a * safe + f.b * np.sign(s)
    )
    out[mask] = np.where(L > 0.0, val, 0.0)
    return out


def _bump_g(t: np.ndarray) -> np.ndarray:
    """exp(1 - 1/(1 - t)) for t < 1, zero otherwise."""
    out = np.zeros_like(t)
    inside = t < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside]))
    return out


def _bump_dg(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    inside = t < 1.0
    ti = t[inside]
    out[inside] = -np.exp(1.0 - 1.0 / (1.0 - ti)) / (1.0 - ti) ** 2
    return out


def _bump_d2g(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    inside = t < 1.0
    ti = t[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ti)) * (2.0 * ti - 1.0) / (1.0 - ti) ** 4
    return out


def _plateau_step(f: SmoothPlateau, d: np.ndarray) -> np.ndarray:
    if f.sharp:
        return (d <= f.inner_radius).astype(float)
    s = (d - f.inner_radius) / (f.outer_radius - f.inner_radius)
    out = np.where(s <= 0.0, 1.0, 0.0)
    mid = (s > 0.0) & (s < 1.0)
    sm = s[mid]
    out[mid] = expit(-(1.0 / (1.0 - sm) - 1.0 / sm))
    return out


def _plateau_step_slope(f: SmoothPlateau, d: np.ndarray) -> np.ndarray:
    """d(step)/d(distance); zero off the transition shell."""
    width = f.outer_radius - f.inner_radius
    s = (d - f.inner_radius) / width
    out = np.zeros_like(d)
    mid = (s > 0.0) & (s < 1.0)
    sm = s[mid]
    z = 1.0 / (1.0 - sm) - 1.0 / sm
    out[mid] = -expit(z) * expit(-z) * (1.0 / (1.0 - sm) ** 2 + 1.0 / sm ** 2) / width
    return out


# Sampled grids

def _grid_axes(f: SampledGrid) -> List[np.ndarray]:
    return [lo + f.spacing * np.arange(c) for lo, c in zip(f.lo, f.counts)]


def _grid_lookup(f: SampledGrid, table: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Interpolate a table shaped like the grid (node) or look up its cell (cell)."""
    if f.layout == "node":
        interp = RegularGridInterpolator(
            _grid_axes(f), table, method="linear", bounds_error=False, fill_value=0.0
        )
        return interp(X)
    lo = np.asarray(f.lo, dtype=float)
    counts = np.asarray(f.counts)
    idx = np.floor((X - lo[None, :]) / f.spacing).astype(int)
    inside = np.all((idx >= 0) & (idx < counts[None, :]), axis=1)
    out = np.zeros(X.shape[0])
    if np.any(inside):
        out[inside] = table[tuple(idx[inside].T)]
    return out


def _grid_gradient_tables(f: SampledGrid) -> List[np.ndarray]:
    arr = f.array()
    tables = []
    for axis, count in enumerate(f.counts):
        if count < 2:
            tables.append(np.zeros_like(arr))
            continue
        edge_order = 2 if count >= 3 else 1
        tables.append(np.gradient(arr, f.spacing, axis=axis, edge_order=edge_order))
    return tables


# Public evaluators

def evaluate_many(f, X: np.ndarray) -> np.ndarray:
    """Values of ``f`` at the rows of ``X`` (shape (N, n))."""
    X = as_points(X, f.dim)
    if isinstance(f, RadialPowerLog):
        return _rpl_profile(f, np.linalg.norm(X, axis=1))
    if isinstance(f, SmoothBump):
        t = np.sum(_offsets(f.center, X) ** 2, axis=1) / f.radius ** 2
        return f.amplitude * _bump_g(t)
    if isinstance(f, SmoothPlateau):
        d = np.linalg.norm(_offsets(f.center, X), axis=1)
        return f.amplitude * _plateau_step(f, d)
    if isinstance(f, GaussianSpec):
        t2 = np.sum(_offsets(f.center, X) ** 2, axis=1) / f.scale ** 2
        return f.amplitude * np.exp(-t2)
    if isinstance(f, SampledGrid):
        return _grid_lookup(f, f.array(), X)
    if isinstance(f, FiniteSum):
        return np.sum([evaluate_many(m, X) for m in f.members], axis=0)
    raise UnsupportedVariantError(type(f).__name__, "evaluate")


def evaluate(f, x: Sequence[float]) -> float:
    """Pointwise value of ``f`` at one point.

    RadialPowerLog with b != 0 returns 0 where the log factor vanishes.

    Raises:
        DimensionMismatchError: If x is not in the dimension of f
    """
    X = as_points(x, f.dim)
    if X.shape[0] != 1:
        raise DimensionMismatchError(f.dim, X.shape[1])
    return float(evaluate_many(f, X)[0])


def _check_gradient_points(f, X: np.ndarray) -> None:
    if isinstance(f, RadialPowerLog):
        r = np.linalg.norm(X, axis=1)
        if np.any(r == 0.0):
            raise UndefinedGradientError("RadialPowerLog has no gradient at the origin")
        edges = [f.r_hi] + ([f.r_lo] if f.r_lo > 0.0 else [])
        if np.any(np.isin(r, edges)):
            raise UndefinedGradientError("RadialPowerLog has no gradient on its support boundary")
    elif isinstance(f, SmoothPlateau) and f.sharp:
        raise UndefinedGradientError("a sharp plateau has no gradient")
    elif isinstance(f, FiniteSum):
        for m in f.members:
            _check_gradient_points(m, X)


def gradient_many(f, X: np.ndarray) -> np.ndarray:
    """Gradients of ``f`` at the rows of ``X``, shape (N, n).

    Closed-form variants use analytic formulas; sampled grids use second
    order finite differences of the stored values.

    Raises:
        UndefinedGradientError: At the origin or support boundary of a
            RadialPowerLog, or for a sharp plateau
    """
    X = as_points(X, f.dim)
    _check_gradient_points(f, X)
    if isinstance(f, RadialPowerLog):
        r = np.linalg.norm(X, axis=1)
        return (_rpl_slope(f, r) / r)[:, None] * X
    if isinstance(f, SmoothBump):
        y = _offsets(f.center, X)
        t = np.sum(y ** 2, axis=1) / f.radius ** 2
        return (f.amplitude * _bump_dg(t) * 2.0 / f.radius ** 2)[:, None] * y
    if isinstance(f, SmoothPlateau):
        y = _offsets(f.center, X)
        d = np.linalg.norm(y, axis=1)
        slope = f.amplitude * _plateau_step_slope(f, d)
        safe = np.where(d > 0.0, d, 1.0)
        return (slope / safe)[:, None] * y
    if isinstance(f, GaussianSpec):
        y = _offsets(f.center, X)
        value = f.amplitude * np.exp(-np.sum(y ** 2, axis=1) / f.scale ** 2)
        return (-2.0 * value / f.scale ** 2)[:, None] * y
    if isinstance(f, SampledGrid):
        tables = _grid_gradient_tables(f)
        return np.stack([_grid_lookup(f, t, X) for t in tables], axis=1)
    if isinstance(f, FiniteSum):
        return np.sum([gradient_many(m, X) for m in f.members], axis=0)
    raise UnsupportedVariantError(type(f).__name__, "gradient")


def gradient(f, x: Sequence[float]) -> np.ndarray:
    """Gradient of ``f`` at one point."""
    X = as_points(x, f.dim)
    return gradient_many(f, X)[0]


def derivative_many(f, beta: Sequence[int], X: np.ndarray) -> np.ndarray:
    """Partial derivative D^beta f at the rows of ``X``.

    Orders 0 and 1 are available for every variant with a gradient;
    Gaussians carry every order through Hermite polynomials and smooth bumps
    carry order 2.

    Raises:
        MissingDerivativeError: If no formula is registered for |beta|
    """
    beta = tuple(int(b) for b in beta)
    X = as_points(X, f.dim)
    if len(beta) != f.dim or any(b < 0 for b in beta):
        raise MissingDerivativeError(beta, getattr(f, "variant", type(f).__name__))
    order = sum(beta)
    if order == 0:
        return evaluate_many(f, X)
    if order == 1:
        return gradient_many(f, X)[:, beta.index(1)]
    if isinstance(f, FiniteSum):
        return np.sum([derivative_many(m, beta, X) for m in f.members], axis=0)
    if isinstance(f, GaussianSpec):
        t = _offsets(f.center, X) / f.scale
        out = f.amplitude * np.exp(-np.sum(t ** 2, axis=1))
        for j, bj in enumerate(beta):
            if bj:
                # d^k/dt^k exp(-t^2) = (-1)^k H_k(t) exp(-t^2)
                out = out * (-1.0 / f.scale) ** bj * eval_hermite(bj, t[:, j])
        return out
    if isinstance(f, SmoothBump) and order == 2:
        y = _offsets(f.center, X)
        R2 = f.radius ** 2
        t = np.sum(y ** 2, axis=1) / R2
        i, j = [axis for axis, b in enumerate(beta) for _ in range(b)]
        out = _bump_d2g(t) * 4.0 * y[:, i] * y[:, j] / R2 ** 2
        if i == j:
            out = out + _bump_dg(t) * 2.0 / R2
        return f.amplitude * out
    raise MissingDerivativeError(beta, f.variant)


def has_derivatives(f, order: int) -> bool:
    """Whether ``derivative_many`` supports every multi-index of this order."""
    if isinstance(f, FiniteSum):
        return all(has_derivatives(m, order) for m in f.members)
    if order == 0:
        return True
    if order == 1:
        return not (isinstance(f, SmoothPlateau) and f.sharp)
    if isinstance(f, GaussianSpec):
        return True
    return isinstance(f, SmoothBump) and order == 2


# Dilation and supports

def dilate_dyadic(f, m: int):
    """Spec of x -> f(2^m x).

    Raises:
        UnsupportedVariantError: For sampled grids (m != 0)
    """
    if m == 0:
        return f
    shrink = math.ldexp(1.0, -m)
    if isinstance(f, RadialPowerLog):
        return f.model_copy(update={
            "amplitude": f.amplitude * math.ldexp(1.0, m) ** f.a,
            "log_offset": f.log_offset + m * math.log(2.0),
            "r_lo": f.r_lo * shrink,
            "r_hi": f.r_hi * shrink,
        })
    if isinstance(f, SmoothBump):
        return f.model_copy(update={
            "center": [c * shrink for c in f.center],
            "radius": f.radius * shrink,
        })
    if isinstance(f, SmoothPlateau):
        return f.model_copy(update={
            "center": [c * shrink for c in f.center],
            "inner_radius": f.inner_radius * shrink,
            "outer_radius": f.outer_radius * shrink,
        })
    if isinstance(f, GaussianSpec):
        return f.model_copy(update={
            "center": [c * shrink for c in f.center],
            "scale": f.scale * shrink,
        })
    if isinstance(f, FiniteSum):
        return FiniteSum(members=[dilate_dyadic(member, m) for member in f.members])
    raise UnsupportedVariantError(type(f).__name__, "dilate_dyadic")


def translate(f, h: Sequence[float]):
    """Spec of x -> f(x - h) for centered variants and their sums."""
    h = [float(v) for v in h]
    if isinstance(f, (SmoothBump, SmoothPlateau, GaussianSpec)):
        return f.model_copy(update={"center": [c + d for c, d in zip(f.center, h)]})
    if isinstance(f, FiniteSum):
        return FiniteSum(members=[translate(member, h) for member in f.members])
    raise UnsupportedVariantError(type(f).__name__, "translate")


def support_radii(f) -> Tuple[float, float]:
    """(rho_min, rho_max) such that f vanishes unless rho_min <= |x| <= rho_max."""
    if isinstance(f, RadialPowerLog):
        return f.r_lo, f.r_hi
    if isinstance(f, (SmoothBump, SmoothPlateau)):
        reach = f.radius if isinstance(f, SmoothBump) else f.outer_radius
        c = float(np.linalg.norm(f.center))
        return max(c - reach, 0.0), c + reach
    if isinstance(f, GaussianSpec):
        return 0.0, math.inf
    if isinstance(f, SampledGrid):
        lo = np.asarray(f.lo)
        hi = np.asarray(f.hi)
        nearest = np.clip(0.0, lo, hi)
        farthest = np.maximum(np.abs(lo), np.abs(hi))
        return float(np.linalg.norm(nearest)), float(np.linalg.norm(farthest))
    if isinstance(f, FiniteSum):
        radii = [support_radii(m) for m in f.members]
        return min(r[0] for r in radii), max(r[1] for r in radii)
    raise UnsupportedVariantError(type(f).__name__, "support_radii")


def _decay(f) -> DecayHint:
    if isinstance(f, RadialPowerLog):
        return DecayHint(kind="power", exponent=f.a)
    if isinstance(f, GaussianSpec):
        return DecayHint(kind="gaussian")
    if isinstance(f, FiniteSum):
        hints = [_decay(m) for m in f.members]
        powers = [h.exponent for h in hints if h.kind == "power"]
        if powers:
            return DecayHint(kind="power", exponent=min(powers))
        if any(h.kind == "gaussian" for h in hints):
            return DecayHint(kind="gaussian")
    return DecayHint(kind="compact")


def support_annuli(f) -> SupportAnnuli:
    """Index range of the dyadic annuli C_k = {2^{k-1} <= |x| < 2^k} carrying mass.

    ``k_max`` is the largest k with 2^{k-1} < rho_max and ``k_min`` the
    smallest k with 2^k > rho_min; ``None`` stands for an unbounded side.
    """
    rho_min, rho_max = support_radii(f)
    return annuli_from_radii(rho_min, rho_max, _decay(f))


def annuli_from_radii(rho_min: float, rho_max: float, decay: DecayHint) -> SupportAnnuli:
    """Annulus index range of the shell rho_min <= |x| <= rho_max."""
    k_max: Optional[int] = None
    if math.isfinite(rho_max):
        mant, e = math.frexp(rho_max)
        k_max = e - 1 if mant == 0.5 else e
    k_min: Optional[int] = None
    if rho_min > 0.0:
        k_min = math.frexp(rho_min)[1]
    return SupportAnnuli(k_min=k_min, k_max=k_max, decay=decay)


# Radial structure

def _is_centered(center: Sequence[float]) -> bool:
    return all(c == 0.0 for c in center)


def is_radial(f) -> bool:
    """Whether ``f`` is a function of |x| alone."""
    if isinstance(f, RadialPowerLog):
        return True
    if isinstance(f, (SmoothBump, SmoothPlateau, GaussianSpec)):
        return _is_centered(f.center)
    if isinstance(f, FiniteSum):
        return all(is_radial(m) for m in f.members)
    return False


def radial_profile(f) -> Profile:
    """phi with f(x) = phi(|x|), for radial specs."""
    if isinstance(f, RadialPowerLog):
        return lambda r: _rpl_profile(f, r)
    if isinstance(f, SmoothBump):
        return lambda r: f.amplitude * _bump_g(np.asarray(r, dtype=float) ** 2 / f.radius ** 2)
    if isinstance(f, SmoothPlateau):
        return lambda r: f.amplitude * _plateau_step(f, np.asarray(r, dtype=float))
    if isinstance(f, GaussianSpec):
        return lambda r: f.amplitude * np.exp(-np.asarray(r, dtype=float) ** 2 / f.scale ** 2)
    if isinstance(f, FiniteSum):
        parts = [radial_profile(m) for m in f.members]
        return lambda r: np.sum([p(r) for p in parts], axis=0)
    raise UnsupportedVariantError(type(f).__name__, "radial_profile")


def radial_slope(f) -> Profile:
    """phi' for radial specs, so that grad f(x) = phi'(|x|) x/|x|."""
    if isinstance(f, RadialPowerLog):
        return lambda r: _rpl_slope(f, r)
    if isinstance(f, SmoothBump):
        R2 = f.radius ** 2
        return lambda r: f.amplitude * _bump_dg(np.asarray(r, dtype=float) ** 2 / R2) * 2.0 * np.asarray(r) / R2
    if isinstance(f, SmoothPlateau):
        if f.sharp:
            raise UndefinedGradientError("a sharp plateau has no gradient")
        return lambda r: f.amplitude * _plateau_step_slope(f, np.asarray(r, dtype=float))
    if isinstance(f, GaussianSpec):
        s2 = f.scale ** 2
        return lambda r: -2.0 * f.amplitude * np.asarray(r) / s2 * np.exp(-np.asarray(r, dtype=float) ** 2 / s2)
    if isinstance(f, FiniteSum):
        parts = [radial_slope(m) for m in f.members]
        return lambda r: np.sum([p(r) for p in parts], axis=0)
    raise UnsupportedVariantError(type(f).__name__, "radial_slope")


def breakpoint_spheres(f) -> List[Tuple[Tuple[float, ...], float]]:
    """Spheres (center, radius) across which ``f`` is not smooth."""
    if isinstance(f, RadialPowerLog):
        origin = (0.0,) * f.n
        radii = [f.r_hi] + ([f.r_lo] if f.r_lo > 0.0 else [])
        if f.b != 0.0:
            radii.append(f.log_zero_radius)
        return [(origin, r) for r in radii]
    if isinstance(f, SmoothBump):
        return [(tuple(f.center), f.radius)]
    if isinstance(f, SmoothPlateau):
        spheres = [(tuple(f.center), f.inner_radius)]
        if not f.sharp:
            spheres.append((tuple(f.center), f.outer_radius))
        return spheres
    if isinstance(f, FiniteSum):
        return [s for m in f.members for s in breakpoint_spheres(m)]
    return []


def radial_breakpoints(f) -> List[float]:
    """Sorted radii where the radial profile of a radial spec is not smooth."""
    return sorted({radius for _, radius in breakpoint_spheres(f)})


def log_singularities(f, slope: bool = False) -> List[Tuple[float, float]]:
    """(radius, exponent) pairs where |phi| (or |phi'|) behaves like |log r + c|^exponent.

    Only RadialPowerLog members with b != 0 whose closed support reaches
    the zero of the log factor contribute; the exponent is b for values and
    b - 1 for slopes.
    """
    members = f.members if isinstance(f, FiniteSum) else [f]
    out = []
    for m in members:
        if (isinstance(m, RadialPowerLog) and m.b != 0.0
                and m.r_lo <= m.log_zero_radius <= m.r_hi):
            out.append((m.log_zero_radius, m.b - 1.0 if slope else m.b))
    return out


# Boxes and scales used by the operators

# Gaussians are treated as supported in |x - c| <= GAUSSIAN_REACH * scale
GAUSSIAN_REACH = 8.0


def support_box(f) -> Tuple[np.ndarray, np.ndarray]:
    """Axis-aligned box (lo, hi) outside of which f vanishes (or is negligible for Gaussians)."""
    if isinstance(f, RadialPowerLog):
        return np.full(f.n, -f.r_hi), np.full(f.n, f.r_hi)
    if isinstance(f, (SmoothBump, SmoothPlateau, GaussianSpec)):
        if isinstance(f, SmoothBump):
            reach = f.radius
        elif isinstance(f, SmoothPlateau):
            reach = f.outer_radius
        else:
            reach = GAUSSIAN_REACH * f.scale
        c = np.asarray(f.center, dtype=float)
        return c - reach, c + reach
    if isinstance(f, SampledGrid):
        return np.asarray(f.lo, dtype=float), np.asarray(f.hi, dtype=float)
    if isinstance(f, FiniteSum):
        boxes = [support_box(m) for m in f.members]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)
    raise UnsupportedVariantError(type(f).__name__, "support_box")


def feature_scale(f) -> float:
    """Smallest length on which f varies appreciably."""
    if isinstance(f, RadialPowerLog):
        return f.r_hi - f.r_lo if f.r_lo > 0.0 else f.r_hi
    if isinstance(f, SmoothBump):
        return f.radius
    if isinstance(f, SmoothPlateau):
        return f.inner_radius if f.sharp else min(f.inner_radius, f.outer_radius - f.inner_radius)
    if isinstance(f, GaussianSpec):
        return f.scale
    if isinstance(f, SampledGrid):
        return f.spacing
    if isinstance(f, FiniteSum):
        return min(feature_scale(m) for m in f.members)
    raise UnsupportedVariantError(type(f).__name__, "feature_scale")
