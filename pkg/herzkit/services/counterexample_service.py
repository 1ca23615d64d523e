"""Counterexample service for the boundary of the L^1_loc region.

This service handles:
- Case 1 (alpha > n - n/p): |x|^{-n} on 0 < |x| < r, truncated at eps
- Case 2 (alpha = n - n/p, q > 1): |x|^{-n} |log|x||^{-1} on 0 < |x| < 1/2
- Closed-form envelopes the numerical columns are compared against
"""

import math
import sys
from typing import List, Optional, Sequence

from herzkit.config import HerzkitSettings
from herzkit.exceptions import InvalidParameterError, RegimeViolationError
from herzkit.logging_config import get_logger
from herzkit.models.functions import RadialPowerLog
from herzkit.models.params import HerzParams, reciprocal
from herzkit.models.requests import CounterexampleRequest
from herzkit.models.results import (
    Case1Row,
    Case1Table,
    Case2Row,
    Case2Table,
    QuadratureOptions,
    TruncationPolicy,
)
from herzkit.numerics import sphere_area
from herzkit.services.norm_service import NormService, dyadic_weight


logger = get_logger(__name__)

LN2 = math.log(2.0)
# Case 1: the last Herz increment must fall below this fraction of the value
CAUCHY_TOL = 1e-6
# Case 2: the L^1 gain from K to 2K must reach this multiple of |S^{n-1}| ln 2
L1_GAIN_FACTOR = 0.5
DEFAULT_EPS_STEPS = 40
ROUNDING_ULPS = 64


def case1_l1_oracle(n: int, r: float, eps: float) -> float:
    """|S^{n-1}| ln(r/eps), the L^1 mass of |x|^{-n} over eps < |x| < r."""
    return sphere_area(n) * math.log(r / eps)


def case2_constants(n: int, p: float, q: float) -> tuple:
    """(c_lo, c_hi, shifted) bounding the Case 2 terms.

    For finite p every term lies in [c (j+1)^{-q}, c j^{-q}] with
    c = (|S^{n-1}| L)^{q/p} (ln 2)^{-q} and L the integral of e^{v(np-n)}
    over [0, ln 2]; ``shifted`` is then True. For p = inf the bounds are
    (ln 2)^{-q} j^{-q} and (2^n / ln 2)^q j^{-q}.
    """
    if math.isinf(p):
        return LN2 ** -q, (2.0 ** n / LN2) ** q, False
    s = n * p - n
    L = LN2 if s == 0.0 else math.expm1(s * LN2) / s
    c = (sphere_area(n) * L) ** (q / p) * LN2 ** -q
    return c, c, True


class CounterexampleService:
    """Service building the tables of the two L^1_loc counterexamples."""

    def __init__(self, settings: HerzkitSettings, norms: NormService):
        """Initialize CounterexampleService.

        Args:
            settings: Toolkit settings
            norms: Norm service used for the numerical columns
        """
        self.settings = settings
        self.norms = norms

    def counterexample_case1(
        self,
        r: float,
        hp: HerzParams,
        eps_list: Sequence[float],
        trunc: Optional[TruncationPolicy] = None,
        opts: Optional[QuadratureOptions] = None,
    ) -> Case1Table:
        """L^1 mass and Herz norm of |x|^{-n} chi_{eps < |x| < r} as eps decreases.

        The L^1 column grows like |S^{n-1}| ln(r/eps) while the Herz column
        settles, so the limit is a Herz function that is not locally integrable.

        Raises:
            RegimeViolationError: If alpha <= n - n/p
            InvalidParameterError: If r <= 0 or eps_list is not decreasing inside (0, r)
        """
        n = hp.n
        bound = n - n * reciprocal(hp.p)
        if not hp.alpha > bound:
            raise RegimeViolationError(
                "case1", f"alpha = {hp.alpha} must exceed n - n/p = {bound:.12g}"
            )
        if not r > 0.0:
            raise InvalidParameterError("r", f"must be positive, got {r}")
        eps_list = [float(e) for e in eps_list]
        if not eps_list:
            raise InvalidParameterError("eps_list", "must not be empty")
        if any(not 0.0 < e < r for e in eps_list) or any(
            b >= a for a, b in zip(eps_list, eps_list[1:])
        ):
            raise InvalidParameterError("eps_list", "must decrease strictly inside (0, r)")

        rows: List[Case1Row] = []
        previous = None
        for eps in eps_list:
            f = RadialPowerLog(n=n, a=-float(n), r_lo=eps, r_hi=r)
            l1 = self.norms.lebesgue_norm(f, 1.0, None, trunc, opts).value
            herz = self.norms.herz_norm(f, hp, None, trunc, opts).value
            rows.append(Case1Row(
                eps=eps,
                l1_mass=l1,
                l1_oracle=case1_l1_oracle(n, r, eps),
                herz_value=herz,
                herz_increment=None if previous is None else abs(herz - previous),
            ))
            previous = herz

        increments = [row.herz_increment for row in rows[1:]]
        # Increments below a few ulps of the value are rounding noise
        floor = ROUNDING_ULPS * sys.float_info.epsilon * rows[-1].herz_value
        monotone = all(b <= a * (1.0 + 1e-9) + floor for a, b in zip(increments, increments[1:]))
        herz_cauchy = bool(increments) and monotone and increments[-1] < CAUCHY_TOL * rows[-1].herz_value
        l1_unbounded = all(
            b.l1_mass - a.l1_mass >= (1.0 - 1e-6) * sphere_area(n) * math.log(a.eps / b.eps)
            for a, b in zip(rows, rows[1:])
        )
        logger.info(
            "Case 1 table built",
            extra={"value": rows[-1].herz_value},
        )
        return Case1Table(n=n, r=r, rows=rows, herz_cauchy=herz_cauchy, l1_unbounded=l1_unbounded)

    def counterexample_case2(
        self,
        hp: HerzParams,
        K: int,
        opts: Optional[QuadratureOptions] = None,
    ) -> Case2Table:
        """Partial sums over the annuli C_{-1}, ..., C_{-2K} of |x|^{-n} |log|x||^{-1} chi_{|x| < 1/2}.

        Herz terms 2^{k alpha q} ||f chi_k||_p^q behave like j^{-q} and their
        partial sums are Cauchy; the L^1 terms |S^{n-1}| ln(1 + 1/j) are
        harmonic and gain a fixed amount between K and 2K.

        Raises:
            InvalidParameterError: If q <= 1, q = inf or K < 1
            RegimeViolationError: If alpha != n - n/p
        """
        n, p, q = hp.n, hp.p, hp.q
        if not q > 1.0:
            raise InvalidParameterError("q", f"Case 2 needs q > 1, got {q}")
        if math.isinf(q):
            raise InvalidParameterError("q", "partial sums need a finite q")
        if K < 1:
            raise InvalidParameterError("K", f"must be at least 1, got {K}")
        bound = n - n * reciprocal(p)
        if abs(hp.alpha - bound) > self.settings.equality_tol:
            raise RegimeViolationError("case2", f"alpha = {hp.alpha} must equal n - n/p = {bound:.12g}")

        f = RadialPowerLog(n=n, a=-float(n), b=-1.0, r_hi=0.5)
        quadrature = self.norms.quadrature
        rows: List[Case2Row] = []
        herz_terms: List[float] = []
        l1_terms: List[float] = []
        for j in range(1, 2 * K + 1):
            k = -j
            mass = quadrature.annulus_lp_norm(f, k, p, None, opts).value
            herz_terms.append(dyadic_weight(k, hp.alpha, mass) ** q)
            l1_terms.append(quadrature.annulus_lp_norm(f, k, 1.0, None, opts).value)
            rows.append(Case2Row(
                j=j,
                herz_term=herz_terms[-1],
                herz_partial_sum=math.fsum(herz_terms),
                l1_term=l1_terms[-1],
                l1_partial_sum=math.fsum(l1_terms),
            ))

        c_lo, c_hi, shifted = case2_constants(n, p, q)
        lower = c_lo * math.fsum((j + 1 if shifted else j) ** -q for j in range(1, K + 1))
        upper = c_hi * math.fsum(j ** -q for j in range(1, K + 1))
        tail_bound = c_hi / ((q - 1.0) * K ** (q - 1.0))
        herz_k = rows[K - 1].herz_partial_sum
        gap = rows[-1].herz_partial_sum - herz_k
        slack = 1e-9 * upper
        within = lower - slack <= herz_k <= upper + slack and gap <= tail_bound + slack

        l1_k, l1_2k = rows[K - 1].l1_partial_sum, rows[-1].l1_partial_sum
        threshold = L1_GAIN_FACTOR * sphere_area(n) * LN2
        logger.info(
            "Case 2 table built",
            extra={"value": herz_k, "k": K},
        )
        return Case2Table(
            n=n,
            K=K,
            rows=rows,
            herz_partial_sum=herz_k,
            lower_envelope=lower,
            upper_envelope=upper,
            tail_bound=tail_bound,
            herz_gap_2k=gap,
            within_envelope=within,
            l1_partial_k=l1_k,
            l1_partial_2k=l1_2k,
            l1_gain=l1_2k - l1_k,
            l1_gain_threshold=threshold,
            non_cauchy=l1_2k - l1_k >= threshold,
        )

    def evaluate(self, req: CounterexampleRequest):
        """Build the table a payload asks for; Case 1 defaults to eps = r 2^{-k}, k = 1..40."""
        if req.case == 1:
            eps_list = req.eps_list or [req.r * 2.0 ** -k for k in range(1, DEFAULT_EPS_STEPS + 1)]
            return self.counterexample_case1(req.r, req.herz, eps_list, opts=req.quadrature)
        return self.counterexample_case2(req.herz, req.K, opts=req.quadrature)
