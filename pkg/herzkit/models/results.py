"""Result and option models shared by the services."""

import math
from typing import List, Literal, Optional, Tuple

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from herzkit.config import HerzkitSettings
from herzkit.exceptions import NormDivergenceError
from herzkit.models.functions import DomainSpec, FullSpace, FunctionSpec, SampledGrid
from herzkit.models.params import HypothesisReport, TheoremId, TheoremParams


QuadratureMode = Literal["radial_1d", "tensor_grid", "oracle_exact"]


class QuadratureOptions(BaseModel):
    """Tolerances and path selection for annulus integrals.

    ``radial_1d`` reduces to a 1-D integral whenever the function and the
    domain are radially symmetric about the origin and falls back to the
    tensor path otherwise; ``tensor_grid`` always uses the tensor path;
    ``oracle_exact`` is reserved for RadialPowerLog masses.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    rel_tol: float = Field(1e-10, gt=0.0, description="Radial 1-D relative tolerance")
    grid_rel_tol: float = Field(1e-4, gt=0.0, description="Tensor-grid relative tolerance")
    max_subdivisions: int = Field(60, ge=1)
    gauss_order: int = Field(20, ge=2, le=200)
    retry_attempts: int = Field(3, ge=1)
    mode: QuadratureMode = "radial_1d"

    @classmethod
    def from_settings(cls, settings: HerzkitSettings, **overrides) -> "QuadratureOptions":
        data = dict(
            rel_tol=settings.radial_rel_tol,
            grid_rel_tol=settings.grid_rel_tol,
            max_subdivisions=settings.max_subdivisions,
            gauss_order=settings.gauss_order,
            retry_attempts=settings.quadrature_retry_attempts,
        )
        data.update(overrides)
        return cls(**data)


class AnnulusMass(BaseModel):
    """||f chi_k chi_Omega||_p for one dyadic annulus C_k."""
    model_config = ConfigDict(frozen=True)

    k: int
    value: float = Field(..., ge=0.0)
    err_est: float = Field(0.0, ge=0.0)
    converged: bool = True


class TruncationPolicy(BaseModel):
    """Window over annulus indices and the rule for widening it."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    k_lo: int = -64
    k_hi: int = 64
    tail_tol: float = Field(1e-12, gt=0.0)
    hard_cap: int = Field(256, ge=8)
    block: int = Field(8, ge=1, description="Annuli per widening step and per tail test")

    @model_validator(mode="after")
    def _ordered(self) -> "TruncationPolicy":
        if self.k_lo > self.k_hi:
            raise ValueError("k_lo must not exceed k_hi")
        return self

    @classmethod
    def from_settings(cls, settings: HerzkitSettings, **overrides) -> "TruncationPolicy":
        lo, hi = settings.truncation_window()
        data = dict(k_lo=lo, k_hi=hi, tail_tol=settings.tail_tol, hard_cap=settings.hard_cap)
        data.update(overrides)
        return cls(**data)


class NormTerm(BaseModel):
    """Weighted annulus term 2^{k alpha} ||f chi_k||_p."""
    model_config = ConfigDict(frozen=True)

    k: int
    term: float


class NormResult(BaseModel):
    """A computed (quasi-)norm with its truncation bookkeeping."""
    model_config = ConfigDict(frozen=True)

    value: float = Field(..., ge=0.0)
    terms: List[NormTerm] = Field(default_factory=list)
    k_range_used: Tuple[int, int]
    err_est: float = Field(0.0, ge=0.0)
    converged: bool = True
    divergence: Optional[Literal["low", "high"]] = Field(
        None, description="Edge where the terms stopped decreasing"
    )

    def require_finite(self) -> "NormResult":
        """Return self, or raise when the sum was seen to diverge.

        Raises:
            NormDivergenceError: If a diverging edge was detected
        """
        if self.divergence is not None:
            raise NormDivergenceError(self.divergence, self.value)
        return self

    def terms_frame(self) -> pd.DataFrame:
        """Two-column (k, term) table for plotting."""
        return pd.DataFrame(
            {"k": [t.k for t in self.terms], "term": [t.term for t in self.terms]}
        )


class PointValue(BaseModel):
    """Operator value at one point."""
    model_config = ConfigDict(frozen=True)

    x: List[float]
    value: float


class OperatorResult(BaseModel):
    """Operator values at requested points and, optionally, on a grid."""
    model_config = ConfigDict(frozen=True)

    operator: str
    points: List[PointValue] = Field(default_factory=list)
    grid: Optional[SampledGrid] = None
    scalar: Optional[float] = Field(None, description="Scalar outputs such as error norms")


# Embedding experiments

RhsMode = Literal["full", "top_order"]


class EmbeddingExperiment(BaseModel):
    """One theorem tested over a family of functions and dyadic dilations."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    theorem: TheoremId
    params: TheoremParams
    family: List[FunctionSpec] = Field(..., min_length=1)
    dilation_levels: List[int] = Field(default_factory=lambda: [0], min_length=1)
    domain: DomainSpec = Field(default_factory=FullSpace)
    rhs_mode: RhsMode = "full"
    override: bool = Field(False, description="Run even when hypotheses fail (watermarked)")

    @model_validator(mode="after")
    def _family_in_dimension(self) -> "EmbeddingExperiment":
        if self.params.n is not None:
            for i, f in enumerate(self.family):
                if f.dim != self.params.n:
                    raise ValueError(
                        f"family[{i}] lives in dimension {f.dim}, params.n is {self.params.n}"
                    )
        return self


class RatioRecord(BaseModel):
    """LHS, RHS and their ratio for one family member at one dilation."""
    model_config = ConfigDict(frozen=True)

    function_index: int
    variant: str
    dilation: int
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    ratio: Optional[float] = None
    error: Optional[str] = None


class EmbeddingReport(BaseModel):
    """Outcome of one embedding experiment."""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    theorem: TheoremId
    per_function: List[RatioRecord]
    empirical_constant: Optional[float] = Field(None, description="Max finite ratio")
    scaling_exponent_lhs: float
    scaling_exponent_rhs: float
    scaling_balanced: bool
    dilation_invariant: Optional[bool] = Field(
        None, description="Ratios invariant across dilations (None when not applicable)"
    )
    max_dilation_drift: Optional[float] = None
    dilation_tol: float
    rhs_mode: RhsMode = "full"
    hypothesis: HypothesisReport
    override: bool = False
    passed: bool = Field(..., alias="pass")

    @model_validator(mode="after")
    def _constant_is_max(self) -> "EmbeddingReport":
        ratios = [r.ratio for r in self.per_function if r.ratio is not None and math.isfinite(r.ratio)]
        expected = max(ratios) if ratios else None
        if expected != self.empirical_constant:
            raise ValueError("empirical_constant must be the maximum finite ratio")
        return self

    def ratios_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.model_dump() for r in self.per_function],
                            columns=list(RatioRecord.model_fields))


# Counterexamples

class Case1Row(BaseModel):
    model_config = ConfigDict(frozen=True)

    eps: float
    l1_mass: float
    l1_oracle: float
    herz_value: float
    herz_increment: Optional[float] = None


class Case1Table(BaseModel):
    """L1 mass versus Herz norm of |x|^{-n} truncated at eps."""
    model_config = ConfigDict(frozen=True)

    n: int
    r: float
    rows: List[Case1Row]
    herz_cauchy: bool
    l1_unbounded: bool

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.model_dump() for row in self.rows], columns=list(Case1Row.model_fields))


class Case2Row(BaseModel):
    model_config = ConfigDict(frozen=True)

    j: int = Field(..., description="Annulus C_{-j}")
    herz_term: Optional[float] = Field(None, description="2^{k alpha q} ||f chi_k||_p^q")
    herz_partial_sum: Optional[float] = None
    l1_term: float
    l1_partial_sum: float


class Case2Table(BaseModel):
    """Partial sums for |x|^{-n} |log|x||^{-1} on 0 < |x| < 1/2."""
    model_config = ConfigDict(frozen=True)

    n: int
    K: int
    rows: List[Case2Row]
    herz_partial_sum: float
    lower_envelope: float
    upper_envelope: float
    tail_bound: float
    herz_gap_2k: float
    within_envelope: bool
    l1_partial_k: float
    l1_partial_2k: float
    l1_gain: float
    l1_gain_threshold: float
    non_cauchy: bool

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.model_dump() for row in self.rows], columns=list(Case2Row.model_fields))


# Constant estimation

class ConstantRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    theorem: TheoremId
    empirical_constant: Optional[float]
    reports: int
    functions: int
    all_passed: bool


class BreakdownRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    theorem: TheoremId
    report_index: int
    function_index: int
    variant: str
    max_ratio: Optional[float]


class ConstantSummary(BaseModel):
    """Per-theorem empirical constants with a per-family breakdown."""
    model_config = ConfigDict(frozen=True)

    constants: List[ConstantRow]
    breakdown: List[BreakdownRow]

    def constants_frame(self) -> pd.DataFrame:
        rows = [r.model_dump(mode="json") for r in self.constants]
        return pd.DataFrame(rows, columns=list(ConstantRow.model_fields))

    def breakdown_frame(self) -> pd.DataFrame:
        rows = [r.model_dump(mode="json") for r in self.breakdown]
        return pd.DataFrame(rows, columns=list(BreakdownRow.model_fields))


class HealthResponse(BaseModel):
    """Response of the health endpoint."""
    status: str = Field(..., description="Service status")
    version: str = Field(..., description="Package version")
