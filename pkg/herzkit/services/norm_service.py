"""Norm service assembling Herz-type norms from annulus masses.

This service handles:
- Herz, Lebesgue and power-weighted Lebesgue norms
- Herz-Sobolev norms (full or top-order) and gradient Herz norms
- Truncation of the sum over annuli with tail and divergence detection
- The discrete Hardy transform and its l^q bound
"""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from herzkit.config import HerzkitSettings
from herzkit.exceptions import (
    DimensionMismatchError,
    InvalidParameterError,
    MissingDerivativeError,
    NonIntegrableSingularityError,
)
from herzkit.logging_config import get_logger
from herzkit.models.functions import FiniteSum, RadialPowerLog, SupportAnnuli
from herzkit.models.params import HerzParams, SobolevParams
from herzkit.models.requests import NormRequest
from herzkit.models.results import (
    AnnulusMass,
    NormResult,
    NormTerm,
    QuadratureOptions,
    TruncationPolicy,
)
from herzkit.services import function_library as fl
from herzkit.services.quadrature_service import QuadratureService, check_domain


logger = get_logger(__name__)

TermFn = Callable[[int], AnnulusMass]

# Relative slack when comparing edge terms for monotone growth
GROWTH_TOL = 1e-9


def lq_norm(values: Sequence[float], q: float) -> float:
    """l^q (quasi-)norm of a finite non-negative sequence, summed with fsum."""
    values = [float(v) for v in values]
    if not values:
        return 0.0
    if math.isinf(q):
        return max(values)
    total = math.fsum(v ** q for v in values)
    return total ** (1.0 / q)


def dyadic_weight(k: int, alpha: float, value: float) -> float:
    """2^{k alpha} * value, with 0 for a zero value and inf on overflow."""
    if value == 0.0:
        return 0.0
    try:
        return 2.0 ** (k * alpha) * value
    except OverflowError:
        return math.inf


def multi_indices(n: int, order: int) -> List[Tuple[int, ...]]:
    """All multi-indices beta in N^n with |beta| = order, in lexicographic order."""
    return [beta for beta in itertools.product(range(order + 1), repeat=n) if sum(beta) == order]


def hardy_transform(eps: Sequence[float], a: float) -> np.ndarray:
    """delta_k = sum_{j >= k} a^{j-k} eps_j, by the recursion delta_k = eps_k + a delta_{k+1}.

    Raises:
        InvalidParameterError: If a is outside (0, 1) or eps has a negative entry
    """
    if not 0.0 < a < 1.0:
        raise InvalidParameterError("a", f"must satisfy 0 < a < 1, got {a}")
    eps = np.asarray(eps, dtype=float)
    if np.any(eps < 0.0):
        raise InvalidParameterError("eps", "entries must be non-negative")
    delta = np.zeros_like(eps)
    carry = 0.0
    for k in range(eps.size - 1, -1, -1):
        carry = eps[k] + a * carry
        delta[k] = carry
    return delta


def hardy_constant(a: float, q: float) -> float:
    """c(a, q) = (1 - a)^{-1} for q >= 1 and (1 - a^q)^{-1/q} for 0 < q < 1."""
    if q >= 1.0:
        return 1.0 / (1.0 - a)
    return (1.0 - a ** q) ** (-1.0 / q)


def hardy_bound_check(eps: Sequence[float], a: float, q: float) -> Tuple[float, float, bool]:
    """Compare ||delta||_q with c(a, q) ||eps||_q.

    Returns:
        Tuple of (lhs, rhs_bound, ok) where ok means lhs <= rhs_bound + 1e-12

    Raises:
        InvalidParameterError: If a is outside (0, 1) or q <= 0
    """
    if not q > 0.0:
        raise InvalidParameterError("q", f"must be positive, got {q}")
    delta = hardy_transform(eps, a)
    lhs = lq_norm(delta, q)
    rhs = hardy_constant(a, q) * lq_norm(eps, q)
    return lhs, rhs, lhs <= rhs + 1e-12


class NormService:
    """Service computing norms by ordered aggregation of annulus terms."""

    def __init__(self, settings: HerzkitSettings, quadrature: QuadratureService):
        """Initialize NormService.

        Args:
            settings: Toolkit settings (truncation defaults, thread count)
            quadrature: Annulus mass engine
        """
        self.settings = settings
        self.quadrature = quadrature

    def default_truncation(self, **overrides) -> TruncationPolicy:
        return TruncationPolicy.from_settings(self.settings, **overrides)

    # Aggregation

    def _compute(self, term_fn: TermFn, ks: List[int]) -> List[AnnulusMass]:
        if self.settings.threads > 1 and len(ks) > 1:
            with ThreadPoolExecutor(max_workers=self.settings.threads) as pool:
                return list(pool.map(term_fn, ks))
        return [term_fn(k) for k in ks]

    def aggregate(
        self,
        term_fn: TermFn,
        alpha: float,
        q: float,
        support: SupportAnnuli,
        trunc: Optional[TruncationPolicy] = None,
        label: str = "norm",
    ) -> NormResult:
        """l^q aggregation of 2^{k alpha} m_k over the annuli.

        Sides bounded by ``support`` are exact; open sides are widened by
        ``trunc.block`` annuli until the edge block contributes at most
        ``tail_tol`` times the running value, the edge terms are seen to be
        non-decreasing outward (divergence), or the hard cap is reached.

        Args:
            term_fn: Annulus mass for index k
            alpha: Dyadic weight exponent
            q: Outer exponent (0 < q <= inf)
            support: Annuli carrying mass
            trunc: Truncation policy (default: from settings)
            label: Name used in logs

        Returns:
            NormResult with ordered per-annulus terms
        """
        trunc = trunc or self.default_truncation()
        block = trunc.block
        open_low = support.k_min is None
        open_high = support.k_max is None
        lo = trunc.k_lo if open_low else support.k_min
        hi = trunc.k_hi if open_high else support.k_max
        if lo > hi:
            if open_low:
                lo = hi - block + 1
            else:
                hi = lo + block - 1
        lo = max(lo, -trunc.hard_cap) if open_low else lo
        hi = min(hi, trunc.hard_cap) if open_high else hi

        masses: Dict[int, AnnulusMass] = {}
        weighted: Dict[int, float] = {}

        def fill(ks: List[int]) -> None:
            todo = [k for k in ks if k not in masses]
            for k, mass in zip(todo, self._compute(term_fn, todo)):
                masses[k] = mass
                weighted[k] = dyadic_weight(k, alpha, mass.value)

        fill(list(range(lo, hi + 1)))
        capped = False
        divergence = None
        while open_low or open_high:
            for side in ("low", "high"):
                if (side == "low" and not open_low) or (side == "high" and not open_high):
                    continue
                running = lq_norm([weighted[k] for k in sorted(weighted)], q)
                edge = list(range(lo, min(lo + block, hi + 1))) if side == "low" \
                    else list(range(max(hi - block + 1, lo), hi + 1))
                terms = [weighted[k] for k in edge]
                if lq_norm(terms, q) <= trunc.tail_tol * running:
                    if side == "low":
                        open_low = False
                    else:
                        open_high = False
                    continue
                outward = terms[::-1] if side == "low" else terms
                if len(outward) >= block and all(t > 0.0 for t in outward) and all(
                    b >= a * (1.0 - GROWTH_TOL) for a, b in zip(outward[:-1], outward[1:])
                ):
                    divergence = side
                    break
                if side == "low":
                    if lo - block < -trunc.hard_cap:
                        capped, open_low = True, False
                        continue
                    lo -= block
                    fill(list(range(lo, lo + block)))
                else:
                    if hi + block > trunc.hard_cap:
                        capped, open_high = True, False
                        continue
                    hi += block
                    fill(list(range(hi - block + 1, hi + 1)))
            if divergence is not None:
                break

        ks = sorted(weighted)
        value = lq_norm([weighted[k] for k in ks], q)
        err = math.fsum(dyadic_weight(k, alpha, masses[k].err_est) for k in ks)
        converged = not capped and divergence is None and all(masses[k].converged for k in ks)
        if divergence is not None:
            logger.warning(
                f"{label} diverges at the {divergence} truncation edge",
                extra={"direction": divergence, "value": value}
            )
        elif capped:
            logger.warning(f"{label} truncation hit the hard cap", extra={"value": value})
        else:
            logger.info(f"{label} computed", extra={"value": value, "err_est": err})
        return NormResult(
            value=value,
            terms=[NormTerm(k=k, term=weighted[k]) for k in ks],
            k_range_used=(ks[0], ks[-1]),
            err_est=err,
            converged=converged,
            divergence=divergence,
        )

    # Public norms

    def herz_norm(
        self,
        f,
        hp: HerzParams,
        omega=None,
        trunc: Optional[TruncationPolicy] = None,
        opts: Optional[QuadratureOptions] = None,
    ) -> NormResult:
        """Homogeneous Herz norm of f chi_Omega with exponents (alpha, p, q)."""
        self._check(f, hp.n, omega)

        def term(k: int) -> AnnulusMass:
            return self.quadrature.annulus_lp_norm(f, k, hp.p, omega, opts)

        return self.aggregate(term, hp.alpha, hp.q, fl.support_annuli(f), trunc, "Herz norm")

    def lebesgue_norm(
        self,
        f,
        p: float,
        omega=None,
        trunc: Optional[TruncationPolicy] = None,
        opts: Optional[QuadratureOptions] = None,
    ) -> NormResult:
        """Plain L^p norm, assembled as the (alpha=0, q=p) Herz norm."""
        def term(k: int) -> AnnulusMass:
            return self.quadrature.annulus_lp_norm(f, k, p, omega, opts)

        return self.aggregate(term, 0.0, p, fl.support_annuli(f), trunc, "Lebesgue norm")

    def weighted_lp_result(
        self,
        f,
        alpha: float,
        p: float,
        omega=None,
        opts: Optional[QuadratureOptions] = None,
        trunc: Optional[TruncationPolicy] = None,
        gradient: bool = False,
    ) -> NormResult:
        """(integral over Omega of |h|^p |x|^{alpha p})^{1/p} for h = f or |grad f|.

        Raises:
            NonIntegrableSingularityError: If the origin exponent test fails
        """
        self._check(f, f.dim, omega)
        self._origin_exponent_test(f, alpha, p, gradient)
        if gradient:
            def term(k: int) -> AnnulusMass:
                return self.quadrature.annulus_gradient_norm(f, k, p, omega, opts, weight=alpha)
        else:
            def term(k: int) -> AnnulusMass:
                return self.quadrature.annulus_lp_norm(f, k, p, omega, opts, weight=alpha)
        return self.aggregate(term, 0.0, p, fl.support_annuli(f), trunc, "Weighted Lebesgue norm")

    def weighted_lp_norm(
        self,
        f,
        alpha: float,
        p: float,
        omega=None,
        opts: Optional[QuadratureOptions] = None,
        trunc: Optional[TruncationPolicy] = None,
    ) -> float:
        """Value of the power-weighted L^p norm.

        Raises:
            NonIntegrableSingularityError: If the origin exponent test fails
            NormDivergenceError: If the annulus sum was seen to diverge
        """
        return self.weighted_lp_result(f, alpha, p, omega, opts, trunc).require_finite().value

    def herz_sobolev_norm(
        self,
        f,
        sp: SobolevParams,
        omega=None,
        trunc: Optional[TruncationPolicy] = None,
        opts: Optional[QuadratureOptions] = None,
        top_order: bool = False,
    ) -> NormResult:
        """Herz-Sobolev norm: l^p over |beta| <= m of the D^beta f masses, then Herz aggregation.

        ``top_order`` keeps only |beta| = m (the homogeneous seminorm).

        Raises:
            MissingDerivativeError: If f has no formula for some required order
        """
        hp = sp.herz
        self._check(f, hp.n, omega)
        orders = [sp.m] if top_order else list(range(sp.m + 1))
        betas: List[Tuple[int, ...]] = []
        for order in orders:
            indices = multi_indices(hp.n, order)
            if not fl.has_derivatives(f, order):
                raise MissingDerivativeError(indices[0], getattr(f, "variant", type(f).__name__))
            betas.extend(indices)

        def term(k: int) -> AnnulusMass:
            masses = [self.quadrature.annulus_derivative_norm(f, beta, k, hp.p, omega, opts)
                      for beta in betas]
            value = lq_norm([m.value for m in masses], hp.p)
            return AnnulusMass(
                k=k,
                value=value,
                err_est=math.fsum(m.err_est for m in masses),
                converged=all(m.converged for m in masses),
            )

        return self.aggregate(term, hp.alpha, hp.q, fl.support_annuli(f), trunc, "Herz-Sobolev norm")

    def gradient_herz_norm(
        self,
        f,
        alpha2: float,
        p: float,
        r: float,
        n: Optional[int] = None,
        omega=None,
        trunc: Optional[TruncationPolicy] = None,
        opts: Optional[QuadratureOptions] = None,
    ) -> NormResult:
        """Herz norm with exponents (alpha2, p, r) of the gradient magnitude |grad f|."""
        self._check(f, n if n is not None else f.dim, omega)

        def term(k: int) -> AnnulusMass:
            return self.quadrature.annulus_gradient_norm(f, k, p, omega, opts)

        return self.aggregate(term, alpha2, r, fl.support_annuli(f), trunc, "Gradient Herz norm")

    def profile_herz_norm(
        self,
        profile: Callable[[np.ndarray], np.ndarray],
        hp: HerzParams,
        support: SupportAnnuli,
        trunc: Optional[TruncationPolicy] = None,
        opts: Optional[QuadratureOptions] = None,
        breakpoints: Sequence[float] = (),
    ) -> NormResult:
        """Herz norm over the full space of the radial function x -> profile(|x|)."""
        def term(k: int) -> AnnulusMass:
            return self.quadrature.profile_annulus_norm(
                profile, hp.n, k, hp.p, opts, breakpoints
            )

        return self.aggregate(term, hp.alpha, hp.q, support, trunc, "Radial profile Herz norm")

    def pointwise_herz_norm(
        self,
        h: Callable[[np.ndarray], np.ndarray],
        hp: HerzParams,
        support: SupportAnnuli,
        trunc: Optional[TruncationPolicy] = None,
        opts: Optional[QuadratureOptions] = None,
    ) -> NormResult:
        """Herz norm over the full space of a function given by point values X -> h(X).

        Open sides of ``support`` widen until the tail test passes, so
        slowly decaying operator outputs keep their far annuli.
        """
        def term(k: int) -> AnnulusMass:
            return self.quadrature.pointwise_annulus_norm(h, hp.n, k, hp.p, opts)

        return self.aggregate(term, hp.alpha, hp.q, support, trunc, "Pointwise Herz norm")

    def evaluate(self, req: NormRequest) -> NormResult:
        """Dispatch a norm payload to the matching norm."""
        f, omega = req.function, req.domain
        trunc, opts = req.truncation, req.quadrature
        if req.kind == "herz":
            return self.herz_norm(f, req.herz, omega, trunc, opts)
        if req.kind == "herz_sobolev":
            return self.herz_sobolev_norm(f, req.sobolev, omega, trunc, opts, top_order=req.top_order)
        if req.kind == "lebesgue":
            return self.lebesgue_norm(f, req.p, omega, trunc, opts)
        if req.kind == "weighted_lp":
            return self.weighted_lp_result(f, req.alpha, req.p, omega, opts, trunc)
        hp = req.herz
        return self.gradient_herz_norm(f, hp.alpha, hp.p, hp.q, hp.n, omega, trunc, opts)

    # Helpers

    def _check(self, f, n: int, omega) -> None:
        if f.dim != n:
            raise DimensionMismatchError(n, f.dim)
        if omega is not None:
            check_domain(omega, n)

    def _origin_exponent_test(self, f, alpha: float, p: float, gradient: bool) -> None:
        """Reject weights that make |h|^p |x|^{alpha p} non-integrable at the origin."""
        if math.isinf(p) or fl.support_radii(f)[0] > 0.0:
            return
        members = f.members if isinstance(f, FiniteSum) else [f]
        a_eff, b_eff = 0.0, 0.0
        for m in members:
            if isinstance(m, RadialPowerLog) and m.r_lo == 0.0:
                a = m.a - 1.0 if gradient and (m.a != 0.0 or m.b != 0.0) else m.a
                if a < a_eff or (a == a_eff and m.b > b_eff):
                    a_eff, b_eff = a, m.b
        s = (a_eff + alpha) * p + f.dim
        if s < -1e-12 or (abs(s) <= 1e-12 and b_eff * p >= -1.0):
            raise NonIntegrableSingularityError("origin", s)
