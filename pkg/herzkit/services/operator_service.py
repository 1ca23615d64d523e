"""Operator service for mollification, maximal functions, Riesz potentials and dyadic averages.

This service handles:
- Convolution with the normalized bump kernel J_eps and its Herz-norm error
- The maximal and fractional maximal functions over a dyadic cube family
- The Riesz potential I_lambda by product integration of its radial kernel
- Dyadic cube averaging onto a cell-layout grid
- Sampling operator outputs on grids fed back to the norm service
"""

import itertools
import math
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from herzkit.config import HerzkitSettings
from herzkit.exceptions import (
    DimensionMismatchError,
    DimensionUnsupportedError,
    DivergentTailError,
    GridResolutionError,
    InvalidParameterError,
    RegionNotDyadicError,
)
from herzkit.logging_config import get_logger
from herzkit.models.functions import Cube, DecayHint, FullSpace, SampledGrid
from herzkit.models.params import HerzParams
from herzkit.models.results import NormResult, QuadratureOptions, TruncationPolicy
from herzkit.numerics import (
    adaptive_gauss,
    composite_nodes,
    jacobi_endpoint,
    radial_sphere_mean,
    sphere_area,
    sphere_rule,
)
from herzkit.retry_utils import best_effort
from herzkit.services import function_library as fl
from herzkit.services.norm_service import NormService
from herzkit.services.quadrature_service import in_domain, radial_window


logger = get_logger(__name__)

GridFn = Callable[[np.ndarray], np.ndarray]

MOLLIFIER_PANELS = 4
MOLLIFIER_ORDER = 8
# Sphere-rule orders for non-radial spherical means
SPHERE_ORDER = {1: 1, 2: 16, 3: 12}
CUBE_ORDER = 6
# Finest panel refinement (levels of doubling) of a cube average, per dimension
CUBE_LEVEL_CAP = {1: 8, 2: 2, 3: 1}
# Rows of points evaluated per chunk in vectorized sweeps
CHUNK_POINTS = 2 ** 20


@lru_cache(maxsize=64)
def mollifier_rule(n: int, eps: float) -> Tuple[np.ndarray, np.ndarray]:
    """Radii and weights W of the discrete kernel: (J_eps * f)(x) = sum_i W_i S_x(rho_i).

    S_x(rho) is the integral of f(x - rho theta) over the unit sphere. The
    weights are normalized so that sum_i W_i * |S^{n-1}| = 1, which makes
    the discrete convolution reproduce constants exactly.
    """
    rho, w = composite_nodes(0.0, eps, MOLLIFIER_PANELS, MOLLIFIER_ORDER)
    t = (rho / eps) ** 2
    density = w * rho ** (n - 1) * np.exp(1.0 - 1.0 / (1.0 - t))
    W = density / (sphere_area(n) * np.sum(density))
    rho.setflags(write=False)
    W.setflags(write=False)
    return rho, W


def _cube_offsets(n: int) -> np.ndarray:
    return np.array(list(itertools.product((0.0, 0.5, 1.0), repeat=n)))


@lru_cache(maxsize=64)
def _unit_cube_rule(n: int, panels: int) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss nodes on [0, 1]^n with weights summing to one."""
    u, w = composite_nodes(0.0, 1.0, panels, CUBE_ORDER)
    grid = np.stack([g.ravel() for g in np.meshgrid(*([u] * n), indexing="ij")], axis=1)
    weights = np.prod(np.stack(
        [g.ravel() for g in np.meshgrid(*([w] * n), indexing="ij")], axis=1
    ), axis=1)
    grid.setflags(write=False)
    weights.setflags(write=False)
    return grid, weights


def _floor_log2(x: float) -> int:
    """j with 2^j <= x < 2^{j+1}."""
    return math.frexp(x)[1] - 1


class OperatorService:
    """Service evaluating the operators pointwise and on sampling grids."""

    def __init__(self, settings: HerzkitSettings, norms: NormService):
        """Initialize OperatorService.

        Args:
            settings: Toolkit settings (grid limits, maximal family window)
            norms: Norm service used for error norms of operator outputs
        """
        self.settings = settings
        self.norms = norms

    # Mollification

    def mollify(self, f, eps: float, x: Sequence[float], omega=None) -> float:
        """(J_eps * f chi_Omega)(x) with J the normalized bump supported in the closed unit ball."""
        return float(self.mollify_many(f, eps, [list(x)], omega)[0])

    def mollify_many(self, f, eps: float, X, omega=None) -> np.ndarray:
        """Vectorized mollification at the rows of X.

        Raises:
            InvalidParameterError: If eps <= 0
            DimensionUnsupportedError: For non-radial data with n > 3
        """
        if not eps > 0.0:
            raise InvalidParameterError("eps", f"must be positive, got {eps}")
        n = f.dim
        X = fl.as_points(X, n)
        rho, W = mollifier_rule(n, float(eps))
        window = radial_window(omega if omega is not None else FullSpace())
        if fl.is_radial(f) and window is not None:
            profile = self._windowed_profile(f, window)
            return np.array([
                float(W @ radial_sphere_mean(profile, float(np.linalg.norm(x)), rho, n))
                for x in X
            ])
        if n > 3:
            raise DimensionUnsupportedError(n, "mollify")
        dirs, wd = sphere_rule(n, SPHERE_ORDER[n])
        shifts = rho[:, None, None] * np.asarray(dirs)[None, :, :]
        per_row = shifts.shape[0] * shifts.shape[1]
        out = np.empty(X.shape[0])
        step = max(1, CHUNK_POINTS // per_row)
        for start in range(0, X.shape[0], step):
            block = X[start:start + step]
            pts = (block[:, None, None, :] - shifts[None, ...]).reshape(-1, n)
            vals = fl.evaluate_many(f, pts) * in_domain(omega, pts)
            vals = vals.reshape(block.shape[0], rho.size, -1)
            out[start:start + step] = (vals @ np.asarray(wd)) @ W
        return out

    def _windowed_profile(self, f, window: Tuple[float, float]):
        profile = fl.radial_profile(f)
        lo, hi = window
        if lo == 0.0 and math.isinf(hi):
            return profile
        return lambda r: profile(r) * ((np.asarray(r) >= lo) & (np.asarray(r) < hi))

    def mollify_error_norm(
        self,
        f,
        eps: float,
        hp: HerzParams,
        omega=None,
        trunc: Optional[TruncationPolicy] = None,
        opts: Optional[QuadratureOptions] = None,
    ) -> NormResult:
        """Herz norm of (J_eps * f - f) chi_Omega.

        Radial data on radial domains use the radial profile of the difference;
        everything else is sampled on a node grid of spacing eps/4.

        Raises:
            GridResolutionError: If eps/4 is below the spacing floor or the grid is too large
        """
        spacing = eps / 4.0
        if spacing < self.settings.grid_spacing_floor:
            raise GridResolutionError(
                f"eps/4 = {spacing:.3g} is below the spacing floor "
                f"{self.settings.grid_spacing_floor:.3g}"
            )
        n = f.dim
        window = radial_window(omega if omega is not None else FullSpace())
        if fl.is_radial(f) and window is not None:
            rho, W = mollifier_rule(n, float(eps))
            profile = self._windowed_profile(f, window)

            def difference(r: np.ndarray) -> np.ndarray:
                r = np.atleast_1d(np.asarray(r, dtype=float))
                smooth = np.array([float(W @ radial_sphere_mean(profile, ri, rho, n)) for ri in r])
                inside = (r >= window[0]) & (r < window[1])
                return (smooth - profile(r)) * inside

            rho_min, rho_max = fl.support_radii(f)
            decay = DecayHint(kind="gaussian") if math.isinf(rho_max) else DecayHint(kind="compact")
            support = fl.annuli_from_radii(max(rho_min - eps, 0.0), rho_max + eps, decay)
            edges = {e for b in fl.radial_breakpoints(f) for e in (b - eps, b, b + eps) if e > 0.0}
            edges |= {e for e in window if 0.0 < e < math.inf}
            logger.info("Mollifier error by radial profile", extra={"value": eps})
            return self.norms.profile_herz_norm(difference, hp, support, trunc, opts, sorted(edges))

        lo, hi = fl.support_box(f)
        grid = self._node_grid(
            lambda X: (self.mollify_many(f, eps, X, omega) - fl.evaluate_many(f, X) * in_domain(omega, X))
            * in_domain(omega, X),
            lo - eps, hi + eps, spacing,
        )
        logger.info("Mollifier error on sampled grid", extra={"value": eps})
        return self.norms.herz_norm(grid, hp, None, trunc, opts)

    # Grids

    def _node_grid(self, fn: GridFn, lo: np.ndarray, hi: np.ndarray, spacing: float) -> SampledGrid:
        """Sample fn at the nodes of a grid snapped to multiples of ``spacing``."""
        n = len(lo)
        if n > 3:
            raise DimensionUnsupportedError(n, "sampled grid")
        lo = np.floor(np.asarray(lo) / spacing) * spacing
        hi = np.ceil(np.asarray(hi) / spacing) * spacing
        counts = np.rint((hi - lo) / spacing).astype(int) + 1
        total = int(np.prod(counts))
        if total > self.settings.max_grid_points:
            raise GridResolutionError(
                f"grid of {total} nodes exceeds max_grid_points={self.settings.max_grid_points}"
            )
        axes = [l + spacing * np.arange(c) for l, c in zip(lo, counts)]
        X = np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")], axis=1)
        values = fn(X)
        return SampledGrid(
            n=n,
            lo=[float(v) for v in lo],
            hi=[float(a[-1]) for a in axes],
            spacing=spacing,
            values=[float(v) for v in values],
            layout="node",
        )

    def output_grid(self, f, fn: GridFn) -> SampledGrid:
        """Sample an operator output on [-2^K, 2^K]^n with K fixed by the support of f.

        The box and spacing are powers of two, so dyadic dilation of f maps
        the grid onto the grid of the dilated function exactly.
        """
        lo, hi = fl.support_box(f)
        extent = float(np.max(np.abs(np.concatenate([lo, hi]))))
        half = math.ldexp(1.0, math.frexp(extent)[1])
        spacing = 2.0 * half / (self.settings.operator_grid_points - 1)
        n = f.dim
        return self._node_grid(fn, np.full(n, -half), np.full(n, half), spacing)

    # Maximal functions

    def _cube_family_max(self, f, x: Sequence[float], t: float) -> float:
        n = f.dim
        if n > 3:
            raise DimensionUnsupportedError(n, "maximal function")
        x = fl.as_points(x, n)[0]
        lo, hi = fl.support_box(f)
        j_scale = _floor_log2(fl.feature_scale(f))
        ext = 2.0 * float(np.max(np.maximum(np.abs(x - lo), np.abs(x - hi))))
        j_ext = math.frexp(ext)[1] if ext > 0.0 else j_scale
        j_lo = j_scale - self.settings.maximal_levels_below
        j_hi = max(j_ext, j_scale) + self.settings.maximal_levels_above
        gap = float(np.max(np.maximum(np.maximum(lo - x, x - hi), 0.0)))
        if gap > 0.0:
            # Cubes with side below the gap to the support average to zero
            j_lo = max(j_lo, _floor_log2(gap))
        offsets = _cube_offsets(n)
        best = 0.0
        for j in range(j_lo, j_hi + 1):
            side = math.ldexp(1.0, j)
            corners = x[None, :] - side * offsets
            # Integrate over the part of the cube inside the support box
            a = np.maximum(corners, lo)
            span = np.maximum(np.minimum(corners + side, hi) - a, 0.0)
            reach = float(np.max(span))
            if reach <= 0.0:
                continue
            panels = 2 ** min(max(_floor_log2(reach) - j_scale, 0), CUBE_LEVEL_CAP[n])
            grid, weights = _unit_cube_rule(n, panels)
            pts = (a[:, None, :] + span[:, None, :] * grid[None, :, :]).reshape(-1, n)
            vals = np.abs(fl.evaluate_many(f, pts)).reshape(offsets.shape[0], -1)
            fraction = np.prod(span / side, axis=1)
            averages = fraction * ((vals ** t) @ weights)
            best = max(best, float(np.max(averages)))
        return best ** (1.0 / t)

    def maximal(self, f, x: Sequence[float]) -> float:
        """Largest cube average of |f| over a family of cubes containing x.

        Cubes have sides 2^j for j from ``maximal_levels_below`` levels under
        the feature scale of f to ``maximal_levels_above`` levels over the
        extent of its support seen from x, anchored at x with corner offsets
        {0, 1/2, 1} times the side on each axis. Every cube Q containing x
        with side in that window lies in a family cube at most 4 times
        larger, so the family maximum m satisfies m <= M f(x) <= 4^n m there.
        """
        return self._cube_family_max(f, x, 1.0)

    def frac_maximal(self, f, t: float, x: Sequence[float]) -> float:
        """(M(|f|^t)(x))^{1/t} over the same cube family.

        Raises:
            InvalidParameterError: If t <= 0
        """
        if not t > 0.0:
            raise InvalidParameterError("t", f"must be positive, got {t}")
        return self._cube_family_max(f, x, t)

    def maximal_many(self, f, X, t: float = 1.0) -> np.ndarray:
        """M_t f at each row of X."""
        X = fl.as_points(X, f.dim)
        return np.array([self._cube_family_max(f, x, t) for x in X])

    def maximal_grid(self, f, t: float = 1.0) -> SampledGrid:
        """M_t f sampled on the operator output grid."""
        return self.output_grid(f, lambda X: self.maximal_many(f, X, t))

    # Riesz potential

    def _sphere_integral(self, f, x: np.ndarray, rho: np.ndarray) -> np.ndarray:
        """S_x(rho): integral of f(x + rho theta) over the unit sphere."""
        n = f.dim
        if fl.is_radial(f):
            return radial_sphere_mean(fl.radial_profile(f), float(np.linalg.norm(x)), rho, n, order=32)
        if n > 3:
            raise DimensionUnsupportedError(n, "riesz")
        dirs, wd = sphere_rule(n, 2 * SPHERE_ORDER[n])
        pts = x[None, None, :] + rho[:, None, None] * np.asarray(dirs)[None, :, :]
        vals = fl.evaluate_many(f, pts.reshape(-1, n)).reshape(rho.size, -1)
        return vals @ np.asarray(wd)

    def riesz(
        self,
        f,
        lam: float,
        x: Sequence[float],
        opts: Optional[QuadratureOptions] = None,
    ) -> float:
        """I_lambda f(x) = integral of f(y) |x - y|^{lambda - n} dy.

        In polar coordinates about x this is the integral over rho of
        rho^{lambda - 1} S_x(rho); the first panel carries the weight
        rho^{lambda - 1} in a Gauss-Jacobi rule, the rest is adaptive and
        split where the spherical mean is not smooth. The Jacobi weight
        integrates the kernel singularity at x exactly, so no separate
        polar-cell correction around x is applied. For the centered unit
        ball indicator this reproduces |S^{n-1}| / lambda at the origin.

        Raises:
            InvalidParameterError: If lambda is outside (0, n)
            DivergentTailError: If f has unbounded support without Gaussian decay
        """
        n = f.dim
        if not 0.0 < lam < n:
            raise InvalidParameterError("lambda", f"must satisfy 0 < lambda < n = {n}, got {lam}")
        support = fl.support_annuli(f)
        if support.k_max is None and support.decay.kind != "gaussian":
            raise DivergentTailError("riesz")
        opts = opts or self.norms.quadrature.default_options()
        x = fl.as_points(x, n)[0]
        lo, hi = fl.support_box(f)
        rho_end = float(np.linalg.norm(np.maximum(np.abs(x - lo), np.abs(x - hi))))
        if rho_end <= 0.0:
            return 0.0
        breaks = set()
        for center, radius in fl.breakpoint_spheres(f):
            d = float(np.linalg.norm(x - np.asarray(center)))
            breaks.update({abs(d - radius), d + radius})
        # f vanishes on spheres closer to x than its support box
        breaks.add(float(np.linalg.norm(np.maximum(np.maximum(lo - x, x - hi), 0.0))))
        edges = [0.0] + sorted(b for b in breaks if 0.0 < b < rho_end) + [rho_end]

        def integrand(rho: np.ndarray) -> np.ndarray:
            rho = np.asarray(rho, dtype=float)
            return np.power(rho, lam - 1.0) * self._sphere_integral(f, x, rho)

        def run(budget: int) -> Tuple[float, float]:
            value, err = jacobi_endpoint(integrand, edges[0], edges[1], lam - 1.0, "left", opts.gauss_order)
            for a, b in zip(edges[1:-1], edges[2:]):
                v, e = adaptive_gauss(integrand, a, b, opts.rel_tol, budget, opts.gauss_order)
                value += v
                err += e
            return value, err

        value, _, _ = best_effort(run, opts.max_subdivisions, opts.retry_attempts, "riesz potential")
        return value

    def riesz_profile(self, f, lam: float, opts: Optional[QuadratureOptions] = None):
        """r -> I_lambda f(r e_1) for radial f (the potential is then radial)."""
        n = f.dim
        e1 = np.zeros(n)
        e1[0] = 1.0

        def profile(r: np.ndarray) -> np.ndarray:
            r = np.atleast_1d(np.asarray(r, dtype=float))
            return np.array([self.riesz(f, lam, ri * e1, opts) for ri in r])

        return profile

    def riesz_many(self, f, lam: float, X, opts: Optional[QuadratureOptions] = None) -> np.ndarray:
        """I_lambda f at each row of X."""
        X = fl.as_points(X, f.dim)
        return np.array([self.riesz(f, lam, x, opts) for x in X])

    def riesz_grid(self, f, lam: float, opts: Optional[QuadratureOptions] = None) -> SampledGrid:
        """I_lambda f sampled on the operator output grid."""
        return self.output_grid(f, lambda X: self.riesz_many(f, lam, X, opts))

    # Dyadic averages

    def dyadic_project(self, f, j: int, region: Cube) -> SampledGrid:
        """Cube averages of f on the dyadic cubes of side 2^{-j} tiling ``region``.

        Averages use |Q|^{-1} = 2^{jn} times the integral. A cell-layout grid
        whose cells refine the dyadic cubes is block-averaged exactly;
        anything else is integrated with a 4-point Gauss rule per axis.

        Raises:
            DimensionMismatchError: If region and f live in different dimensions
            RegionNotDyadicError: If region is not a union of dyadic cubes of side 2^{-j}
        """
        n = f.dim
        if len(region.corner) != n:
            raise DimensionMismatchError(n, len(region.corner))
        if n > 3:
            raise DimensionUnsupportedError(n, "dyadic_project")
        side = math.ldexp(1.0, -j)
        cells = region.side / side
        if abs(cells - round(cells)) > 1e-9 * max(1.0, cells) or round(cells) < 1:
            raise RegionNotDyadicError(j, f"side {region.side} is not a multiple of 2^{-j}")
        for c in region.corner:
            pos = c / side
            if abs(pos - round(pos)) > 1e-9 * max(1.0, abs(pos)):
                raise RegionNotDyadicError(j, f"corner coordinate {c} is not on the 2^{-j} lattice")
        count = int(round(cells))
        if count ** n > self.settings.max_grid_points:
            raise GridResolutionError(f"{count ** n} cubes exceed max_grid_points")
        corner = np.asarray(region.corner, dtype=float)
        exact = self._block_average(f, corner, count, side)
        if exact is not None:
            values = exact
        else:
            u, w = composite_nodes(0.0, 1.0, 1, 4)
            local = np.stack([g.ravel() for g in np.meshgrid(*([u] * n), indexing="ij")], axis=1)
            weights = np.prod(np.stack(
                [g.ravel() for g in np.meshgrid(*([w] * n), indexing="ij")], axis=1
            ), axis=1)
            idx = np.stack([g.ravel() for g in np.meshgrid(*([np.arange(count)] * n), indexing="ij")], axis=1)
            values = np.empty(idx.shape[0])
            step = max(1, CHUNK_POINTS // local.shape[0])
            for start in range(0, idx.shape[0], step):
                block = idx[start:start + step]
                pts = corner[None, None, :] + side * (block[:, None, :] + local[None, :, :])
                vals = fl.evaluate_many(f, pts.reshape(-1, n)).reshape(block.shape[0], -1)
                values[start:start + step] = vals @ weights
        return SampledGrid(
            n=n,
            lo=[float(c) for c in corner],
            hi=[float(c + region.side) for c in corner],
            spacing=side,
            values=[float(v) for v in np.ravel(values)],
            layout="cell",
        )

    def _block_average(self, f, corner: np.ndarray, count: int, side: float) -> Optional[np.ndarray]:
        """Exact averages when f is a cell grid whose cells tile the target cubes."""
        if not (isinstance(f, SampledGrid) and f.layout == "cell"):
            return None
        ratio = side / f.spacing
        offsets = (corner - np.asarray(f.lo)) / f.spacing
        if abs(ratio - round(ratio)) > 1e-9 or np.any(np.abs(offsets - np.rint(offsets)) > 1e-9):
            return None
        ratio, offsets = int(round(ratio)), np.rint(offsets).astype(int)
        arr = f.array()
        for axis, (off, available) in enumerate(zip(offsets, f.counts)):
            idx = off + np.arange(count * ratio)
            valid = (idx >= 0) & (idx < available)
            arr = np.take(arr, np.clip(idx, 0, available - 1), axis=axis)
            shape = [1] * arr.ndim
            shape[axis] = idx.size
            arr = arr * valid.reshape(shape)
        n = arr.ndim
        arr = arr.reshape(sum(([count, ratio] for _ in range(n)), []))
        return arr.mean(axis=tuple(range(1, 2 * n, 2))).ravel()
