"""Quadrature service for L^p masses over dyadic annuli.

This service handles:
- Radial reduction to a 1-D integral in u = log r for radial data on radial domains
- Gauss-Jacobi endpoint panels at the zero of a power-log factor
- Tensor quadrature in polar coordinates for non-radial data (n <= 3)
- Closed-form and scipy reference masses for RadialPowerLog (oracle mode)
"""

import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from herzkit.config import HerzkitSettings
from herzkit.exceptions import (
    DimensionMismatchError,
    DimensionUnsupportedError,
    NonIntegrableSingularityError,
    QuadratureNotConvergedError,
    UnsupportedVariantError,
)
from herzkit.logging_config import get_logger
from herzkit.models.functions import (
    AnnulusRange,
    Ball,
    Cube,
    FullSpace,
    RadialPowerLog,
)
from herzkit.models.results import AnnulusMass, QuadratureOptions
from herzkit.numerics import (
    adaptive_gauss,
    composite_nodes,
    coordinate_moment,
    jacobi_endpoint,
    sphere_area,
    sphere_rule,
)
from herzkit.retry_utils import best_effort
from herzkit.services import function_library as fl


logger = get_logger(__name__)

Profile = Callable[[np.ndarray], np.ndarray]

# Width (in log r) of the Gauss-Jacobi panel at a log singularity
JACOBI_PANEL = 0.25
TENSOR_ORDER = 8
TENSOR_LEVELS = 6
# Refinement cap for functions known only through point values (no escalation)
POINTWISE_LEVELS = 3
SUP_LEVELS = 16


def radial_window(omega) -> Optional[Tuple[float, float]]:
    """Radial interval of a domain symmetric about the origin, else None."""
    if isinstance(omega, FullSpace):
        return 0.0, math.inf
    if isinstance(omega, AnnulusRange):
        return math.ldexp(1.0, omega.k_min - 1), math.ldexp(1.0, omega.k_max)
    if isinstance(omega, Ball) and all(c == 0.0 for c in omega.center):
        return 0.0, omega.radius
    return None


def in_domain(omega, X: np.ndarray) -> np.ndarray:
    """Boolean mask of the rows of X lying in the domain."""
    X = np.asarray(X, dtype=float)
    if omega is None or isinstance(omega, FullSpace):
        return np.ones(X.shape[0], dtype=bool)
    if isinstance(omega, Ball):
        c = np.asarray(omega.center, dtype=float)
        return np.linalg.norm(X - c[None, :], axis=1) < omega.radius
    if isinstance(omega, AnnulusRange):
        r = np.linalg.norm(X, axis=1)
        return (r >= math.ldexp(1.0, omega.k_min - 1)) & (r < math.ldexp(1.0, omega.k_max))
    if isinstance(omega, Cube):
        c = np.asarray(omega.corner, dtype=float)
        return np.all((X >= c[None, :]) & (X < c[None, :] + omega.side), axis=1)
    raise UnsupportedVariantError(type(omega).__name__, "domain")


def check_domain(omega, n: int) -> None:
    """Raise if a domain with coordinates lives in another dimension."""
    coords = getattr(omega, "center", None) or getattr(omega, "corner", None)
    if coords is not None and len(coords) != n:
        raise DimensionMismatchError(n, len(coords))


def _ray_interval(omega, dirs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-direction [t_in, t_out] of the ray {t d : t >= 0} inside the domain."""
    m = dirs.shape[0]
    window = radial_window(omega)
    if window is not None:
        return np.full(m, window[0]), np.full(m, window[1])
    if isinstance(omega, Ball):
        c = np.asarray(omega.center, dtype=float)
        b = dirs @ c
        disc = b ** 2 - c @ c + omega.radius ** 2
        root = np.sqrt(np.maximum(disc, 0.0))
        lo = np.where(disc > 0.0, np.maximum(b - root, 0.0), 0.0)
        hi = np.where(disc > 0.0, np.maximum(b + root, 0.0), 0.0)
        return lo, hi
    if isinstance(omega, Cube):
        lo = np.zeros(m)
        hi = np.full(m, math.inf)
        for axis, corner in enumerate(omega.corner):
            d = dirs[:, axis]
            upper = corner + omega.side
            with np.errstate(divide="ignore", invalid="ignore"):
                t1 = corner / d
                t2 = upper / d
            moving = d != 0.0
            inside = (corner <= 0.0) & (0.0 < upper)
            lo = np.where(moving, np.maximum(lo, np.minimum(t1, t2)), np.where(inside, lo, 0.0))
            hi = np.where(moving, np.minimum(hi, np.maximum(t1, t2)), np.where(inside, hi, 0.0))
        return lo, np.maximum(hi, lo)
    raise UnsupportedVariantError(type(omega).__name__, "domain")


def _ray_sphere_hits(spheres, dirs: np.ndarray) -> np.ndarray:
    """Distances along each direction where the ray crosses the given spheres (NaN if none)."""
    if not spheres:
        return np.empty((dirs.shape[0], 0))
    cols = []
    for center, radius in spheres:
        c = np.asarray(center, dtype=float)
        b = dirs @ c
        disc = b ** 2 - c @ c + radius ** 2
        root = np.sqrt(np.where(disc > 0.0, disc, np.nan))
        cols.extend([b - root, b + root])
    return np.stack(cols, axis=1)


def _mass_from_integral(integral: float, err: float, p: float) -> Tuple[float, float]:
    if integral <= 0.0:
        return 0.0, 0.0
    value = integral ** (1.0 / p)
    return value, value * err / (p * integral)


def _is_plain_integer(x: float) -> bool:
    return x >= 0.0 and float(x).is_integer()


class QuadratureService:
    """Service computing ||h chi_{C_k} chi_Omega||_p for h = f, |grad f| or D^beta f."""

    def __init__(self, settings: HerzkitSettings):
        """Initialize QuadratureService.

        Args:
            settings: Toolkit settings supplying tolerances and grid limits
        """
        self.settings = settings

    def default_options(self, **overrides) -> QuadratureOptions:
        """Options built from the settings, with explicit overrides."""
        return QuadratureOptions.from_settings(self.settings, **overrides)

    # Public annulus masses

    def annulus_lp_norm(
        self,
        f,
        k: int,
        p: float,
        omega=None,
        opts: Optional[QuadratureOptions] = None,
        weight: float = 0.0,
    ) -> AnnulusMass:
        """L^p mass of f on the annulus C_k intersected with a domain.

        Args:
            f: Function spec
            k: Annulus index, C_k = {2^{k-1} <= |x| < 2^k}
            p: Lebesgue exponent (math.inf for the essential supremum)
            omega: Domain (default: full space)
            opts: Quadrature options (default: from settings)
            weight: Exponent w of an extra factor |x|^w folded into the integrand

        Returns:
            AnnulusMass with value, error estimate and convergence flag

        Raises:
            DimensionMismatchError: If f and omega live in different dimensions
            DimensionUnsupportedError: If tensor quadrature is needed with n > 3
            NonIntegrableSingularityError: If a log singularity is not integrable
        """
        return self._annulus(f, k, p, omega, opts, weight, "value", ())

    def annulus_gradient_norm(
        self,
        f,
        k: int,
        p: float,
        omega=None,
        opts: Optional[QuadratureOptions] = None,
        weight: float = 0.0,
    ) -> AnnulusMass:
        """L^p mass of the Euclidean gradient magnitude |grad f| on C_k."""
        return self._annulus(f, k, p, omega, opts, weight, "gradient", ())

    def annulus_derivative_norm(
        self,
        f,
        beta: Sequence[int],
        k: int,
        p: float,
        omega=None,
        opts: Optional[QuadratureOptions] = None,
        weight: float = 0.0,
    ) -> AnnulusMass:
        """L^p mass of one partial derivative D^beta f on C_k."""
        return self._annulus(f, k, p, omega, opts, weight, "derivative", tuple(beta))

    def profile_annulus_norm(
        self,
        profile: Profile,
        n: int,
        k: int,
        p: float,
        opts: Optional[QuadratureOptions] = None,
        breakpoints: Sequence[float] = (),
    ) -> AnnulusMass:
        """L^p mass on C_k of the radial function x -> profile(|x|) over the full space."""
        opts = opts or self.default_options()
        r1, r2 = math.ldexp(1.0, k - 1), math.ldexp(1.0, k)
        value, err, converged = self._radial_core(
            profile, n, r1, r2, p, 0.0, sphere_area(n), breakpoints, [], opts
        )
        return AnnulusMass(k=k, value=value, err_est=err, converged=converged)

    def pointwise_annulus_norm(
        self,
        h: Profile,
        n: int,
        k: int,
        p: float,
        opts: Optional[QuadratureOptions] = None,
    ) -> AnnulusMass:
        """L^p mass on C_k of a function known only through point values.

        Used for operator outputs (maximal functions, Riesz potentials of
        non-radial data), which have unbounded support and no closed form.
        The polar tensor rule is refined until ``grid_rel_tol`` is met or
        ``POINTWISE_LEVELS`` doublings are spent; an unmet tolerance flags
        the mass as not converged instead of escalating the budget.

        Raises:
            DimensionUnsupportedError: If n > 3
        """
        if n > 3:
            raise DimensionUnsupportedError(n, "tensor-grid quadrature")
        opts = opts or self.default_options()
        r1, r2 = math.ldexp(1.0, k - 1), math.ldexp(1.0, k)
        value, err, converged = self._tensor_core(
            h, n, [], r1, r2, p, FullSpace(), opts, 0.0, levels=POINTWISE_LEVELS, attempts=1
        )
        return AnnulusMass(k=k, value=value, err_est=err, converged=converged)

    # Dispatch

    def _annulus(self, f, k, p, omega, opts, weight, kind, beta) -> AnnulusMass:
        omega = omega if omega is not None else FullSpace()
        opts = opts or self.default_options()
        check_domain(omega, f.dim)
        r1, r2 = math.ldexp(1.0, k - 1), math.ldexp(1.0, k)
        value, err, converged = self._shell(f, r1, r2, p, omega, opts, weight, kind, beta)
        logger.debug(
            "Annulus mass computed",
            extra={"k": k, "variant": getattr(f, "variant", None), "value": value, "err_est": err}
        )
        return AnnulusMass(k=k, value=value, err_est=err, converged=converged)

    def _shell(self, f, r1, r2, p, omega, opts, weight, kind, beta) -> Tuple[float, float, bool]:
        rho_min, rho_max = fl.support_radii(f)
        lo, hi = max(r1, rho_min), min(r2, rho_max)
        if hi <= lo:
            return 0.0, 0.0, True
        window = radial_window(omega)
        if opts.mode == "oracle_exact":
            return self._oracle(f, lo, hi, p, window, weight, kind, opts)
        order = sum(beta)
        radial = (
            opts.mode == "radial_1d"
            and window is not None
            and fl.is_radial(f)
            and (kind != "derivative" or order <= 1)
        )
        if radial:
            a, b = max(lo, window[0]), min(hi, window[1])
            if b <= a:
                return 0.0, 0.0, True
            slope = kind == "gradient" or (kind == "derivative" and order == 1)
            profile = fl.radial_slope(f) if slope else fl.radial_profile(f)
            if slope and kind == "derivative" and math.isfinite(p):
                ang = coordinate_moment(f.dim, p)
            else:
                ang = sphere_area(f.dim)
            singular = [(r, e * p if math.isfinite(p) else e)
                        for r, e in fl.log_singularities(f, slope=slope)]
            return self._radial_core(
                lambda r: np.abs(profile(r)), f.dim, a, b, p, weight, ang,
                fl.radial_breakpoints(f), singular, opts
            )
        if f.dim > 3:
            raise DimensionUnsupportedError(f.dim, "tensor-grid quadrature")
        return self._tensor(f, lo, hi, p, omega, opts, weight, kind, beta)

    # Radial path

    def _radial_core(
        self,
        h: Profile,
        n: int,
        a: float,
        b: float,
        p: float,
        weight: float,
        ang: float,
        breakpoints: Sequence[float],
        singular: List[Tuple[float, float]],
        opts: QuadratureOptions,
    ) -> Tuple[float, float, bool]:
        """Integrate ang * |h(r)|^p r^{n-1+wp} over [a, b] in u = log r."""
        inner = sorted({x for x in breakpoints if a < x < b} | {r for r, _ in singular if a < r < b})
        edges = [a] + inner + [b]
        if math.isinf(p):
            return self._radial_sup(h, edges, weight, singular, opts)

        for radius, exponent in singular:
            if a <= radius <= b and exponent <= -1.0:
                raise NonIntegrableSingularityError(f"|x| = {radius:.17g}", exponent)
        singular_u = {math.log(r): e for r, e in singular if a <= r <= b}
        scale = n + weight * p

        def integrand(u: np.ndarray) -> np.ndarray:
            return ang * np.power(h(np.exp(u)), p) * np.exp(scale * u)

        segments = [(math.log(x), math.log(y)) for x, y in zip(edges[:-1], edges[1:])]

        def run(budget: int) -> Tuple[float, float]:
            total, total_err, failed = 0.0, 0.0, False
            for ua, ub in segments:
                try:
                    value, err = self._segment(integrand, ua, ub, singular_u, opts, budget)
                except QuadratureNotConvergedError as e:
                    value, err, failed = e.value, e.err_est, True
                total += value
                total_err += err
            if failed:
                raise QuadratureNotConvergedError(total, total_err, budget)
            return total, total_err

        integral, err, converged = best_effort(
            run, opts.max_subdivisions, opts.retry_attempts, "radial quadrature"
        )
        value, value_err = _mass_from_integral(integral, err, p)
        return value, value_err, converged

    def _segment(self, integrand, ua, ub, singular_u, opts, budget) -> Tuple[float, float]:
        left = singular_u.get(ua)
        right = singular_u.get(ub)
        if left is not None and _is_plain_integer(left):
            left = None
        if right is not None and _is_plain_integer(right):
            right = None
        if left is not None and right is not None:
            mid = 0.5 * (ua + ub)
            v1, e1 = self._segment(integrand, ua, mid, {ua: left}, opts, budget)
            v2, e2 = self._segment(integrand, mid, ub, {ub: right}, opts, budget)
            return v1 + v2, e1 + e2
        width = min(ub - ua, JACOBI_PANEL)
        value, err = 0.0, 0.0
        if left is not None:
            value, err = jacobi_endpoint(integrand, ua, ua + width, left, "left", opts.gauss_order)
            ua = ua + width
        elif right is not None:
            value, err = jacobi_endpoint(integrand, ub - width, ub, right, "right", opts.gauss_order)
            ub = ub - width
        if ub > ua:
            v, e = adaptive_gauss(integrand, ua, ub, opts.rel_tol, budget, opts.gauss_order)
            value += v
            err += e
        return value, err

    def _radial_sup(self, h, edges, weight, singular, opts) -> Tuple[float, float, bool]:
        """Essential sup of |h(r)| r^w by node maxima on refining log-spaced meshes."""
        for radius, exponent in singular:
            if edges[0] <= radius <= edges[-1] and exponent < 0.0:
                return math.inf, 0.0, True
        meshes = []
        for x, y in zip(edges[:-1], edges[1:]):
            # Support ends are open; stay one ulp inside every segment
            meshes.append((np.nextafter(x, math.inf), np.nextafter(y, -math.inf)))
        previous = None
        for level in range(2, SUP_LEVELS + 1):
            best = 0.0
            for x, y in meshes:
                r = np.exp(np.linspace(math.log(x), math.log(y), 2 ** level + 1))
                best = max(best, float(np.max(h(r) * r ** weight)))
            if previous is not None and abs(best - previous) <= opts.grid_rel_tol * best:
                return best, abs(best - previous), True
            previous = best
        logger.warning("Accepting non-converged sup estimate", extra={"value": previous})
        return previous, 0.0, False

    # Oracle path

    def _oracle(self, f, lo, hi, p, window, weight, kind, opts) -> Tuple[float, float, bool]:
        if not isinstance(f, RadialPowerLog):
            raise UnsupportedVariantError(getattr(f, "variant", type(f).__name__), "oracle_exact")
        if window is None:
            raise UnsupportedVariantError("non-radial domain", "oracle_exact")
        if kind == "derivative":
            raise UnsupportedVariantError("derivative", "oracle_exact")
        lo, hi = max(lo, window[0]), min(hi, window[1])
        if hi <= lo:
            return 0.0, 0.0, True
        if kind == "gradient":
            if f.b != 0.0:
                raise UnsupportedVariantError("RadialPowerLog gradient with b != 0", "oracle_exact")
            amp, a = abs(f.amplitude * f.a), f.a - 1.0
        else:
            amp, a = abs(f.amplitude), f.a
        n = f.n
        if math.isinf(p):
            if f.b == 0.0:
                return amp * max(lo ** (a + weight), hi ** (a + weight)), 0.0, True
            singular = [(r, e) for r, e in fl.log_singularities(f)]
            return self._radial_sup(
                lambda r: np.abs(fl.radial_profile(f)(r)),
                [lo] + [r for r, _ in singular if lo < r < hi] + [hi], weight, singular, opts
            )
        s = (a + weight) * p + n
        omega_n = sphere_area(n)
        if f.b == 0.0:
            if s == 0.0:
                integral = omega_n * amp ** p * math.log(hi / lo)
            else:
                integral = omega_n * amp ** p * lo ** s * math.expm1(s * math.log(hi / lo)) / s
            return _mass_from_integral(integral, 0.0, p) + (True,)
        bp = f.b * p
        u0 = -f.log_offset
        ua, ub = math.log(lo), math.log(hi)
        if ua <= u0 <= ub and bp <= -1.0:
            raise NonIntegrableSingularityError(f"|x| = {math.exp(u0):.17g}", bp)
        pieces = [(ua, u0), (u0, ub)] if ua < u0 < ub else [(ua, ub)]
        integral, err = 0.0, 0.0
        for xa, xb in pieces:
            if xa == u0:
                v, e = integrate.quad(lambda u: math.exp(s * u), xa, xb, weight="alg",
                                      wvar=(bp, 0.0), epsabs=0.0, epsrel=1e-13, limit=200)
            elif xb == u0:
                v, e = integrate.quad(lambda u: math.exp(s * u), xa, xb, weight="alg",
                                      wvar=(0.0, bp), epsabs=0.0, epsrel=1e-13, limit=200)
            else:
                v, e = integrate.quad(lambda u: math.exp(s * u) * abs(u - u0) ** bp, xa, xb,
                                      epsabs=0.0, epsrel=1e-13, limit=200)
            integral += v
            err += e
        value, value_err = _mass_from_integral(omega_n * amp ** p * integral, omega_n * amp ** p * err, p)
        return value, value_err, True

    # Tensor path

    def _pointwise(self, f, kind: str, beta: Tuple[int, ...]) -> Profile:
        if kind == "value":
            return lambda X: fl.evaluate_many(f, X)
        if kind == "gradient":
            return lambda X: np.linalg.norm(fl.gradient_many(f, X), axis=1)
        return lambda X: fl.derivative_many(f, beta, X)

    def _tensor(self, f, lo, hi, p, omega, opts, weight, kind, beta) -> Tuple[float, float, bool]:
        return self._tensor_core(
            self._pointwise(f, kind, beta), f.dim, fl.breakpoint_spheres(f),
            lo, hi, p, omega, opts, weight,
        )

    def _tensor_core(
        self, h, n, spheres, lo, hi, p, omega, opts, weight,
        levels: int = TENSOR_LEVELS, attempts: Optional[int] = None,
    ) -> Tuple[float, float, bool]:
        def level_estimate(level: int) -> Optional[float]:
            dirs, wang = sphere_rule(n, TENSOR_ORDER * 2 ** level)
            t_in, t_out = _ray_interval(omega, np.asarray(dirs))
            t_in = np.maximum(t_in, lo)
            t_out = np.maximum(np.minimum(t_out, hi), t_in)
            hits = _ray_sphere_hits(spheres, np.asarray(dirs))
            hits = np.where(np.isnan(hits), t_in[:, None], hits)
            hits = np.clip(hits, t_in[:, None], t_out[:, None])
            breaks = np.sort(np.concatenate([t_in[:, None], t_out[:, None], hits], axis=1), axis=1)
            seg_a, seg_len = breaks[:, :-1], np.diff(breaks, axis=1)
            x_ref, w_ref = composite_nodes(0.0, 1.0, 2 ** level, TENSOR_ORDER)
            if dirs.shape[0] * seg_a.shape[1] * x_ref.size > self.settings.max_grid_points:
                return None
            r = seg_a[..., None] + seg_len[..., None] * x_ref
            wr = seg_len[..., None] * w_ref
            pts = r[..., None] * np.asarray(dirs)[:, None, None, :]
            vals = np.abs(h(pts.reshape(-1, n))).reshape(r.shape)
            if math.isinf(p):
                live = wr > 0.0
                return float(np.max(np.where(live, vals * r ** weight, 0.0), initial=0.0))
            dens = np.power(vals, p) * r ** (n - 1 + weight * p)
            return float(np.sum(np.asarray(wang)[:, None, None] * wr * dens))

        def run(budget: int) -> Tuple[float, float]:
            previous, diff = None, math.inf
            for level in range(budget + 1):
                current = level_estimate(level)
                if current is None:
                    break
                if previous is not None:
                    diff = abs(current - previous)
                    if diff <= opts.grid_rel_tol * abs(current):
                        return current, diff
                previous = current
            raise QuadratureNotConvergedError(previous or 0.0, diff if math.isfinite(diff) else 0.0, budget)

        integral, err, converged = best_effort(
            run, levels, attempts or opts.retry_attempts, "tensor-grid quadrature"
        )
        if math.isinf(p):
            return integral, err, converged
        value, value_err = _mass_from_integral(integral, err, p)
        return value, value_err, converged
