"""Payload models shared by the CLI and the HTTP surface.

Every payload forbids unknown fields so that typos in a config file fail
validation instead of being ignored.
"""

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from herzkit.exceptions import PayloadValidationError
from herzkit.models.functions import Cube, DomainSpec, FullSpace, FunctionSpec
from herzkit.models.params import Exponent, HerzParams, SobolevParams, TheoremId, TheoremParams
from herzkit.models.results import (
    EmbeddingReport,
    QuadratureOptions,
    RhsMode,
    TruncationPolicy,
)


class _Payload(BaseModel):
    model_config = ConfigDict(extra="forbid")


NormKind = Literal["herz", "herz_sobolev", "lebesgue", "weighted_lp", "gradient_herz"]


class NormRequest(_Payload):
    """Norm of one function.

    ``herz`` feeds the Herz and gradient-Herz norms (the gradient norm reads
    (alpha, p, q) as (alpha2, p, r)); ``sobolev`` the Herz-Sobolev norm;
    ``p`` and ``alpha`` the Lebesgue and power-weighted norms.
    """
    function: FunctionSpec
    kind: NormKind = "herz"
    herz: Optional[HerzParams] = None
    sobolev: Optional[SobolevParams] = None
    p: Optional[Exponent] = None
    alpha: Optional[float] = Field(None, allow_inf_nan=False)
    domain: DomainSpec = Field(default_factory=FullSpace)
    top_order: bool = False
    truncation: Optional[TruncationPolicy] = None
    quadrature: Optional[QuadratureOptions] = None

    @model_validator(mode="after")
    def _fields_for_kind(self) -> "NormRequest":
        required = {
            "herz": ["herz"],
            "gradient_herz": ["herz"],
            "herz_sobolev": ["sobolev"],
            "lebesgue": ["p"],
            "weighted_lp": ["p", "alpha"],
        }[self.kind]
        for name in required:
            if getattr(self, name) is None:
                raise ValueError(f"'{name}' is required for kind '{self.kind}'")
        return self


class CheckRequest(_Payload):
    """Hypothesis check of one theorem."""
    theorem: TheoremId
    params: TheoremParams
    tol: Optional[float] = Field(None, gt=0.0)


OperatorName = Literal["mollify", "mollify_error", "maximal", "frac_maximal", "riesz", "dyadic_project"]


class OperatorRequest(_Payload):
    """Operator values at points, on the output grid, or a mollifier error norm."""
    operator: OperatorName
    function: FunctionSpec
    points: List[List[float]] = Field(default_factory=list)
    grid: bool = Field(False, description="Also sample the output on the operator grid")
    eps: Optional[float] = Field(None, gt=0.0)
    t: Optional[float] = Field(None, gt=0.0)
    lam: Optional[float] = Field(None, gt=0.0)
    j: Optional[int] = None
    region: Optional[Cube] = None
    herz: Optional[HerzParams] = None
    domain: DomainSpec = Field(default_factory=FullSpace)
    truncation: Optional[TruncationPolicy] = None
    quadrature: Optional[QuadratureOptions] = None

    @model_validator(mode="after")
    def _fields_for_operator(self) -> "OperatorRequest":
        required = {
            "mollify": ["eps"],
            "mollify_error": ["eps", "herz"],
            "maximal": [],
            "frac_maximal": ["t"],
            "riesz": ["lam"],
            "dyadic_project": ["j", "region"],
        }[self.operator]
        for name in required:
            if getattr(self, name) is None:
                raise ValueError(f"'{name}' is required for operator '{self.operator}'")
        pointwise = self.operator in ("mollify", "maximal", "frac_maximal", "riesz")
        if pointwise and not self.points and not self.grid:
            raise ValueError("give 'points' or set 'grid'")
        return self


class EmbedRequest(_Payload):
    """Embedding experiment. Without ``family`` the default family for the theorem is used."""
    theorem: TheoremId
    params: TheoremParams
    family: Optional[List[FunctionSpec]] = Field(None, min_length=1)
    random_members: int = Field(0, ge=0, le=64, description="Extra seeded random Gaussians and bumps")
    dilation_levels: List[int] = Field(default_factory=lambda: [0], min_length=1)
    domain: DomainSpec = Field(default_factory=FullSpace)
    rhs_mode: RhsMode = "full"
    override: bool = False
    truncation: Optional[TruncationPolicy] = None
    quadrature: Optional[QuadratureOptions] = None


class CounterexampleRequest(_Payload):
    """One of the two L^1_loc boundary counterexamples."""
    case: Literal[1, 2]
    herz: HerzParams
    r: float = Field(1.0, gt=0.0)
    eps_list: Optional[List[float]] = Field(None, min_length=1)
    K: int = Field(32, ge=1)
    quadrature: Optional[QuadratureOptions] = None


class ReportRequest(_Payload):
    """Constant summary over finished reports and/or experiments run now."""
    reports: List[EmbeddingReport] = Field(default_factory=list)
    experiments: List[EmbedRequest] = Field(default_factory=list)

    @model_validator(mode="after")
    def _not_empty(self) -> "ReportRequest":
        if not self.reports and not self.experiments:
            raise ValueError("give at least one report or experiment")
        return self


Command = Literal["norm", "check", "operator", "embed", "counterexample", "report"]

PAYLOADS = {
    "norm": NormRequest,
    "check": CheckRequest,
    "operator": OperatorRequest,
    "embed": EmbedRequest,
    "counterexample": CounterexampleRequest,
    "report": ReportRequest,
}


class RunConfig(_Payload):
    """One command with its payload, as read from a JSON config file."""
    command: Command
    payload: Dict[str, Any] = Field(default_factory=dict)
    seed: int = 0
    output_dir: Optional[str] = None

    def parsed_payload(self) -> BaseModel:
        """Validate the payload against the command's schema.

        Raises:
            PayloadValidationError: Naming the first offending field
        """
        return validate_payload(PAYLOADS[self.command], self.payload)


def validate_payload(model: type, data: Any) -> BaseModel:
    """Validate ``data`` as ``model``, mapping pydantic errors to PayloadValidationError."""
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first.get("loc", ())) or "payload"
        raise PayloadValidationError(location, first.get("msg", "invalid")) from e
