"""Embedding service for theorem experiments.

This service handles:
- Computing both sides of each inequality for one function
- Symbolic scaling exponents of both sides under f -> f(2^m .)
- Running a theorem over a family of functions and dyadic dilations
- Detecting ratio drift across dilations
- Summarizing empirical constants per theorem
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from herzkit.config import HerzkitSettings
from herzkit.exceptions import HerzkitError, InvalidParameterError, MissingParameterError
from herzkit.logging_config import get_logger
from herzkit.models.functions import (
    Ball,
    DecayHint,
    FullSpace,
    GaussianSpec,
    RadialPowerLog,
    SmoothBump,
    SmoothPlateau,
    SupportAnnuli,
)
from herzkit.models.params import (
    SOBOLEV_THEOREMS,
    HerzParams,
    SobolevParams,
    TheoremId,
    TheoremParams,
)
from herzkit.models.requests import EmbedRequest, validate_payload
from herzkit.models.results import (
    BreakdownRow,
    ConstantRow,
    ConstantSummary,
    EmbeddingExperiment,
    EmbeddingReport,
    QuadratureOptions,
    RatioRecord,
    RhsMode,
    TruncationPolicy,
)
from herzkit.services import function_library as fl
from herzkit.services.admissibility import check_hypotheses, sobolev_exponent
from herzkit.services.norm_service import NormService
from herzkit.services.operator_service import OperatorService


logger = get_logger(__name__)

# Theorems whose sides involve no derivatives of f
DERIVATIVE_FREE = frozenset({TheoremId.L1LOC, TheoremId.MAXIMAL_INQ, TheoremId.RESULT3})


def _need(params: TheoremParams, symbol: str, thm: TheoremId):
    value = getattr(params, symbol)
    if value is None:
        raise MissingParameterError(symbol, thm.value)
    return value


def _inv(p: float) -> Fraction:
    return Fraction(0) if math.isinf(p) else 1 / Fraction(p)


def target_exponent(thm: TheoremId, params: TheoremParams) -> float:
    """Lebesgue exponent q of the target space of a Herz-Sobolev embedding.

    EmbeddingsFirst takes q from n/q = n/p - m + alpha2 - alpha1 unless q is
    given; EmbedQeqP uses q = p and EmbedQInfty q = inf.
    """
    if thm == TheoremId.EMBED_Q_EQ_P:
        return _need(params, "p", thm)
    if thm == TheoremId.EMBED_Q_INFTY:
        return math.inf
    if thm == TheoremId.EMBEDDINGS_FIRST and params.q is None:
        n, p, m = _need(params, "n", thm), _need(params, "p", thm), _need(params, "m", thm)
        n_over_q = n * float(_inv(p)) - m + _need(params, "alpha2", thm) - _need(params, "alpha1", thm)
        if n_over_q <= 0.0:
            raise InvalidParameterError("q", f"n/q = {n_over_q:.12g} must be positive")
        return n / n_over_q
    return _need(params, "q", thm)


def scaling_exponents(thm: TheoremId, params: TheoremParams) -> Tuple[float, float]:
    """(e_lhs, e_rhs) with LHS(f(2^m .)) = 2^{-m e_lhs} LHS(f) and likewise for the RHS.

    Herz norms scale with alpha + n/p, one gradient adds -1, I_lambda adds
    -lambda and the theta-products combine convexly. Herz-Sobolev sides use
    the top-order exponent alpha2 + n/p - m. L1loc reports the exponents of
    the whole-space norms. Arithmetic is exact on the binary inputs.
    """
    thm = TheoremId(thm)
    need = lambda symbol: _need(params, symbol, thm)  # noqa: E731
    n = Fraction(need("n"))

    if thm == TheoremId.L1LOC:
        return float(n), float(Fraction(need("alpha")) + n * _inv(need("p")))
    if thm == TheoremId.MAXIMAL_INQ:
        e = Fraction(need("alpha")) + n * _inv(need("p"))
        return float(e), float(e)
    if thm == TheoremId.RESULT3:
        alpha, p, lam = Fraction(need("alpha")), need("p"), Fraction(need("lam"))
        inv_p_star = _inv(p) - lam / n
        return float(alpha + n * inv_p_star), float(alpha + n * _inv(p) - lam)

    e_lhs_q = need("q") if thm not in SOBOLEV_THEOREMS else target_exponent(thm, params)
    e_lhs = Fraction(need("alpha1")) + n * _inv(e_lhs_q)
    if thm == TheoremId.EMBEDDINGS1:
        e_rhs = Fraction(need("alpha2")) + n - 1
    elif thm in (TheoremId.EMBEDDINGS2, TheoremId.CKN_CLASSICAL):
        e_rhs = Fraction(need("alpha2")) + n * _inv(need("p")) - 1
    elif thm in (TheoremId.EMBEDDINGS3, TheoremId.EMBEDDINGS4):
        p = 1.0 if thm == TheoremId.EMBEDDINGS3 else need("p")
        theta = Fraction(need("theta"))
        gradient_side = Fraction(need("alpha2")) + n * _inv(p) - 1
        base_side = Fraction(need("alpha3")) + n * _inv(need("u"))
        e_rhs = theta * gradient_side + (1 - theta) * base_side
    else:
        e_rhs = Fraction(need("alpha2")) + n * _inv(need("p")) - need("m")
    return float(e_lhs), float(e_rhs)


def default_family(n: int, derivative_order: int = 0) -> List:
    """Default test functions in dimension n.

    Three centered Gaussians (scales 1/2, 1, 2) and three bumps (radii 1/2,
    1, 2, the largest off-center) always; two sharp-edged RadialPowerLog
    shells when no derivatives are needed, two smooth plateaus (one
    off-center) when gradients are needed, nothing more for higher orders.
    """
    origin = [0.0] * n
    shifted = [0.5] + [0.0] * (n - 1)
    family: List = [GaussianSpec(center=origin, scale=s) for s in (0.5, 1.0, 2.0)]
    family += [
        SmoothBump(center=origin, radius=0.5),
        SmoothBump(center=origin, radius=1.0),
        SmoothBump(center=shifted, radius=2.0),
    ]
    if derivative_order == 0:
        family += [
            RadialPowerLog(n=n, a=-0.5, b=0.0, r_lo=0.25, r_hi=1.0),
            RadialPowerLog(n=n, a=0.5, b=1.0, r_lo=0.5, r_hi=2.0),
        ]
    elif derivative_order == 1:
        family += [
            SmoothPlateau(center=origin, inner_radius=0.5, outer_radius=1.0),
            SmoothPlateau(center=shifted, inner_radius=1.0, outer_radius=2.0),
        ]
    return family


def family_for(thm: TheoremId, params: TheoremParams) -> List:
    """Default family with members smooth enough for the theorem's RHS."""
    thm = TheoremId(thm)
    n = _need(params, "n", thm)
    if thm in DERIVATIVE_FREE:
        return default_family(n, 0)
    if thm in SOBOLEV_THEOREMS:
        return default_family(n, _need(params, "m", thm))
    return default_family(n, 1)


def random_members(n: int, count: int, seed: int) -> List:
    """Seeded Gaussians and bumps with centers in [-1, 1]^n and scales in [1/2, 2]."""
    rng = np.random.default_rng(seed)
    members = []
    for i in range(count):
        center = [float(c) for c in rng.uniform(-1.0, 1.0, size=n)]
        scale = float(2.0 ** rng.uniform(-1.0, 1.0))
        if i % 2 == 0:
            members.append(GaussianSpec(center=center, scale=scale))
        else:
            members.append(SmoothBump(center=center, radius=scale))
    return members


def build_experiment(req: EmbedRequest, seed: int = 0, override: bool = False) -> EmbeddingExperiment:
    """Experiment from a payload: explicit or default family plus seeded extras.

    Raises:
        PayloadValidationError: If the family does not live in params.n
    """
    family = list(req.family) if req.family is not None else family_for(req.theorem, req.params)
    if req.random_members:
        n = req.params.n if req.params.n is not None else family[0].dim
        family += random_members(n, req.random_members, seed)
    data = dict(
        theorem=req.theorem,
        params=req.params,
        family=family,
        dilation_levels=req.dilation_levels,
        domain=req.domain,
        rhs_mode=req.rhs_mode,
        override=req.override or override,
    )
    return validate_payload(EmbeddingExperiment, data)


class EmbeddingService:
    """Service evaluating theorem inequalities numerically."""

    def __init__(self, settings: HerzkitSettings, norms: NormService, operators: OperatorService):
        """Initialize EmbeddingService.

        Args:
            settings: Toolkit settings (threads, tolerances)
            norms: Norm service
            operators: Operator service for the maximal and Riesz experiments
        """
        self.settings = settings
        self.norms = norms
        self.operators = operators

    def _herz(self, f, alpha, p, q, n, omega, trunc, opts) -> float:
        hp = HerzParams(alpha=alpha, p=p, q=q, n=n)
        return self.norms.herz_norm(f, hp, omega, trunc, opts).require_finite().value

    def lhs_rhs(
        self,
        thm: TheoremId,
        params: TheoremParams,
        f,
        domain=None,
        trunc: Optional[TruncationPolicy] = None,
        opts: Optional[QuadratureOptions] = None,
        rhs_mode: RhsMode = "full",
    ) -> Tuple[float, float]:
        """Both sides of the theorem's inequality for one function.

        Args:
            thm: Theorem
            params: Parameter bundle
            f: Function spec in dimension params.n
            domain: Domain for the Herz-Sobolev theorems (whole space otherwise)
            trunc: Truncation policy
            opts: Quadrature options
            rhs_mode: "top_order" keeps only |beta| = m in Herz-Sobolev norms

        Returns:
            (LHS, RHS)

        Raises:
            NormDivergenceError: If either side was seen to diverge
            MissingParameterError: If params lacks a referenced symbol
        """
        thm = TheoremId(thm)
        need = lambda symbol: _need(params, symbol, thm)  # noqa: E731
        n = need("n")
        omega = domain if domain is not None and thm in SOBOLEV_THEOREMS | {TheoremId.L1LOC} else None

        if thm == TheoremId.L1LOC:
            alpha, p, q = need("alpha"), need("p"), need("q")
            local = omega if omega is not None and not isinstance(omega, FullSpace) else Ball(
                center=[0.0] * n, radius=1.0
            )
            lhs = self.norms.lebesgue_norm(f, 1.0, local, trunc, opts).require_finite().value
            return lhs, self._herz(f, alpha, p, q, n, None, trunc, opts)

        if thm == TheoremId.MAXIMAL_INQ:
            alpha, p, q = need("alpha"), need("p"), need("q")
            lhs = self.norms.pointwise_herz_norm(
                lambda X: self.operators.maximal_many(f, X),
                HerzParams(alpha=alpha, p=p, q=q, n=n),
                SupportAnnuli(decay=DecayHint(kind="power", exponent=-float(n))),
                trunc, opts,
            ).require_finite().value
            return lhs, self._herz(f, alpha, p, q, n, None, trunc, opts)

        if thm == TheoremId.RESULT3:
            alpha, p, lam = need("alpha"), need("p"), need("lam")
            q0, q1 = need("q0"), need("q1")
            target = HerzParams(alpha=alpha, p=sobolev_exponent(p, lam, n), q=q1, n=n)
            support = SupportAnnuli(decay=DecayHint(kind="power", exponent=lam - n))
            if fl.is_radial(f):
                lhs = self.norms.profile_herz_norm(
                    self.operators.riesz_profile(f, lam, opts), target, support, trunc, opts,
                    fl.radial_breakpoints(f),
                ).require_finite().value
            else:
                lhs = self.norms.pointwise_herz_norm(
                    lambda X: self.operators.riesz_many(f, lam, X, opts), target, support, trunc, opts
                ).require_finite().value
            return lhs, self._herz(f, alpha, p, q0, n, None, trunc, opts)

        if thm == TheoremId.CKN_CLASSICAL:
            lhs = self.norms.weighted_lp_norm(f, need("alpha1"), need("q"), None, opts, trunc)
            rhs = self.norms.weighted_lp_result(
                f, need("alpha2"), need("p"), None, opts, trunc, gradient=True
            ).require_finite().value
            return lhs, rhs

        if thm in SOBOLEV_THEOREMS:
            r, p, m = need("r"), need("p"), need("m")
            q = target_exponent(thm, params)
            lhs = self._herz(f, need("alpha1"), q, r, n, omega, trunc, opts)
            sp = SobolevParams(herz=HerzParams(alpha=need("alpha2"), p=p, q=r, n=n), m=m)
            rhs = self.norms.herz_sobolev_norm(
                f, sp, omega, trunc, opts, top_order=rhs_mode == "top_order"
            ).require_finite().value
            return lhs, rhs

        r = need("r")
        lhs = self._herz(f, need("alpha1"), need("q"), r, n, None, trunc, opts)
        if thm in (TheoremId.EMBEDDINGS1, TheoremId.EMBEDDINGS2):
            p = 1.0 if thm == TheoremId.EMBEDDINGS1 else need("p")
            rhs = self.norms.gradient_herz_norm(f, need("alpha2"), p, r, n, None, trunc, opts)
            return lhs, rhs.require_finite().value

        # Embeddings3 and Embeddings4: theta-weighted product
        theta, s = need("theta"), need("s")
        p = 1.0 if thm == TheoremId.EMBEDDINGS3 else need("p")
        gradient_side = self.norms.gradient_herz_norm(
            f, need("alpha2"), p, s, n, None, trunc, opts
        ).require_finite().value
        base_side = self._herz(f, need("alpha3"), need("u"), need("v"), n, None, trunc, opts)
        return lhs, gradient_side ** theta * base_side ** (1.0 - theta)

    def scaling_exponents(self, thm: TheoremId, params: TheoremParams) -> Tuple[float, float]:
        return scaling_exponents(thm, params)

    def _drift_applies(self, exp: EmbeddingExperiment) -> bool:
        if exp.theorem == TheoremId.L1LOC or not isinstance(exp.domain, FullSpace):
            return False
        if len(set(exp.dilation_levels)) < 2:
            return False
        if exp.theorem in SOBOLEV_THEOREMS:
            return exp.rhs_mode == "top_order" or exp.params.m == 0
        return True

    def _evaluate(
        self,
        exp: EmbeddingExperiment,
        index: int,
        m: int,
        trunc: Optional[TruncationPolicy],
        opts: Optional[QuadratureOptions],
    ) -> RatioRecord:
        f = exp.family[index]
        variant = f.variant
        try:
            g = fl.dilate_dyadic(f, m)
            lhs, rhs = self.lhs_rhs(exp.theorem, exp.params, g, exp.domain, trunc, opts, exp.rhs_mode)
        except HerzkitError as e:
            logger.warning(
                "Family member failed",
                extra={"theorem": exp.theorem.value, "function_index": index, "dilation": m,
                       "error": e.code},
            )
            return RatioRecord(function_index=index, variant=variant, dilation=m,
                               error=f"{e.code}: {e.message}")
        if rhs > 0.0:
            ratio = lhs / rhs
        elif lhs > 0.0:
            ratio = math.inf
        else:
            return RatioRecord(function_index=index, variant=variant, dilation=m, lhs=lhs, rhs=rhs,
                               error="DEGENERATE: both sides vanish")
        logger.debug(
            "Ratio computed",
            extra={"theorem": exp.theorem.value, "function_index": index, "dilation": m, "value": ratio},
        )
        return RatioRecord(function_index=index, variant=variant, dilation=m, lhs=lhs, rhs=rhs, ratio=ratio)

    def run_embedding(
        self,
        exp: EmbeddingExperiment,
        trunc: Optional[TruncationPolicy] = None,
        opts: Optional[QuadratureOptions] = None,
    ) -> EmbeddingReport:
        """Evaluate every family member at every dilation level.

        Per-member failures are recorded in the report and do not stop the
        run. When both sides balance, the ratios of each member must agree
        across dilations to ``dilation_tol``; otherwise the drift against
        the predicted 2^{m (e_rhs - e_lhs)} law is still reported.

        Args:
            exp: Experiment definition
            trunc: Truncation policy
            opts: Quadrature options

        Returns:
            EmbeddingReport ordered by (function index, dilation)
        """
        start = time.time()
        hypothesis = check_hypotheses(exp.theorem, exp.params, self.settings.equality_tol)
        e_lhs, e_rhs = scaling_exponents(exp.theorem, exp.params)
        balanced = abs(e_lhs - e_rhs) <= self.settings.equality_tol

        tasks = [(i, m) for i in range(len(exp.family)) for m in sorted(set(exp.dilation_levels))]
        if self.settings.threads > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(max_workers=self.settings.threads) as pool:
                records = list(pool.map(lambda t: self._evaluate(exp, t[0], t[1], trunc, opts), tasks))
        else:
            records = [self._evaluate(exp, i, m, trunc, opts) for i, m in tasks]

        drift = self._max_drift(records, e_lhs, e_rhs) if self._drift_applies(exp) else None
        invariant = None
        if drift is not None and balanced:
            invariant = drift <= self.settings.dilation_tol

        ratios = [r.ratio for r in records if r.error is None]
        finite = [x for x in ratios if x is not None and math.isfinite(x)]
        passed = (
            (hypothesis.ok or exp.override)
            and bool(finite)
            and len(finite) == len(ratios)
            and invariant is not False
        )
        report = EmbeddingReport(
            theorem=exp.theorem,
            per_function=records,
            empirical_constant=max(finite) if finite else None,
            scaling_exponent_lhs=e_lhs,
            scaling_exponent_rhs=e_rhs,
            scaling_balanced=balanced,
            dilation_invariant=invariant,
            max_dilation_drift=drift,
            dilation_tol=self.settings.dilation_tol,
            rhs_mode=exp.rhs_mode,
            hypothesis=hypothesis,
            override=exp.override,
            passed=passed,
        )
        logger.info(
            "Embedding experiment finished",
            extra={
                "theorem": exp.theorem.value,
                "value": report.empirical_constant,
                "duration_ms": round((time.time() - start) * 1000, 2),
            },
        )
        return report

    @staticmethod
    def _max_drift(records: Sequence[RatioRecord], e_lhs: float, e_rhs: float) -> Optional[float]:
        """Largest |ratio_m / (ratio_ref 2^{(m - m_ref)(e_rhs - e_lhs)}) - 1| over members."""
        by_function: Dict[int, List[RatioRecord]] = {}
        for r in records:
            if r.ratio is not None and math.isfinite(r.ratio) and r.ratio > 0.0:
                by_function.setdefault(r.function_index, []).append(r)
        worst: Optional[float] = None
        for rows in by_function.values():
            if len(rows) < 2:
                continue
            ref = min(rows, key=lambda r: (abs(r.dilation), r.dilation))
            for r in rows:
                predicted = ref.ratio * 2.0 ** ((r.dilation - ref.dilation) * (e_rhs - e_lhs))
                d = abs(r.ratio / predicted - 1.0)
                worst = d if worst is None else max(worst, d)
        return worst

    def estimate_constant(self, reports: Sequence[EmbeddingReport]) -> ConstantSummary:
        """Per-theorem maximum ratio with a per-family breakdown.

        Raises:
            InvalidParameterError: If no report is given
        """
        if not reports:
            raise InvalidParameterError("reports", "at least one report is required")
        grouped: Dict[TheoremId, List[EmbeddingReport]] = {}
        for report in reports:
            grouped.setdefault(report.theorem, []).append(report)

        constants = []
        for thm, group in grouped.items():
            values = [r.empirical_constant for r in group if r.empirical_constant is not None]
            constants.append(ConstantRow(
                theorem=thm,
                empirical_constant=max(values) if values else None,
                reports=len(group),
                functions=sum(len({x.function_index for x in r.per_function}) for r in group),
                all_passed=all(r.passed for r in group),
            ))

        breakdown = []
        for index, report in enumerate(reports):
            per_index: Dict[int, List[RatioRecord]] = {}
            for record in report.per_function:
                per_index.setdefault(record.function_index, []).append(record)
            for function_index, rows in sorted(per_index.items()):
                finite = [r.ratio for r in rows if r.ratio is not None and math.isfinite(r.ratio)]
                breakdown.append(BreakdownRow(
                    theorem=report.theorem,
                    report_index=index,
                    function_index=function_index,
                    variant=rows[0].variant,
                    max_ratio=max(finite) if finite else None,
                ))
        return ConstantSummary(constants=constants, breakdown=breakdown)
