"""Parameter models: extended exponents, Herz/Sobolev/CKN exponent sets.

Extended exponents are floats in [1, inf] where ``math.inf`` is the tagged
value for infinity, so that ``n / p`` is exactly ``0.0`` when ``p`` is
infinite. They parse from numbers or the strings "inf", "infinity", "∞" and
serialize infinity back to "inf".
"""

import math
from enum import Enum
from typing import Annotated, Dict, List, Optional, Union

from pydantic import (
    AfterValidator,
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    model_validator,
)


_INFINITY_TOKENS = {"inf", "+inf", "infinity", "+infinity", "∞"}


def parse_extended(value: Union[float, int, str]) -> float:
    """Parse a number or an infinity token into a float."""
    if isinstance(value, str):
        token = value.strip().lower()
        if token in _INFINITY_TOKENS:
            return math.inf
        value = float(token)
    value = float(value)
    if math.isnan(value):
        raise ValueError("exponent must not be NaN")
    return value


def _at_least_one(value: float) -> float:
    if not value >= 1.0:
        raise ValueError("exponent must satisfy 1 <= p <= inf")
    return value


def serialize_extended(value: float) -> Union[float, str]:
    """Render infinity as the string "inf", keep finite values as floats."""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


Exponent = Annotated[
    float,
    BeforeValidator(parse_extended),
    AfterValidator(_at_least_one),
    PlainSerializer(serialize_extended, return_type=Union[float, str]),
]


def reciprocal(p: float) -> float:
    """Return 1/p with 1/inf = 0 exactly."""
    return 0.0 if math.isinf(p) else 1.0 / p


def conjugate(p: float) -> float:
    """Return the Hölder conjugate p' with 1/p + 1/p' = 1."""
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


class HerzParams(BaseModel):
    """Exponent triple (alpha, p, q) of a homogeneous Herz space in dimension n."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(..., allow_inf_nan=False, description="Dyadic weight exponent")
    p: Exponent = Field(..., description="Lebesgue exponent on each annulus")
    q: Exponent = Field(..., description="Sequence exponent across annuli")
    n: int = Field(..., ge=1, description="Ambient dimension")

    def homogeneity(self) -> float:
        """Exponent e with ||f(2^m .)|| = 2^{-m e} ||f||, i.e. alpha + n/p."""
        return self.alpha + self.n * reciprocal(self.p)


class SobolevParams(BaseModel):
    """Herz-Sobolev parameters: a Herz triple plus the derivative order m."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    herz: HerzParams
    m: int = Field(..., ge=0, description="Weak-derivative order")


class CKNParams(BaseModel):
    """Exponents of the Herz-type Caffarelli-Kohn-Nirenberg inequality."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha1: float = Field(..., allow_inf_nan=False)
    alpha2: float = Field(..., allow_inf_nan=False)
    alpha3: float = Field(..., allow_inf_nan=False)
    sigma: float = Field(..., allow_inf_nan=False)
    theta: float = Field(..., ge=0.0, le=1.0)
    p: Exponent
    q: Exponent
    u: Exponent
    r: Exponent
    s: Exponent
    v: Exponent
    n: int = Field(..., ge=1)


class TheoremId(str, Enum):
    """Numbered statements whose hypotheses and inequalities are encoded."""
    L1LOC = "L1loc"
    MAXIMAL_INQ = "MaximalInq"
    RESULT3 = "Result3"
    EMBEDDINGS1 = "Embeddings1"
    EMBEDDINGS2 = "Embeddings2"
    EMBEDDINGS3 = "Embeddings3"
    EMBEDDINGS4 = "Embeddings4"
    CKN_CLASSICAL = "CKNClassical"
    EMBEDDINGS_FIRST = "EmbeddingsFirst"
    EMBED_Q_EQ_P = "EmbedQeqP"
    EMBED_Q_INFTY = "EmbedQInfty"
    EMBED_P_LT_Q = "EmbedPltQ"
    EMBED_Q_LT_P = "EmbedQltP"


# Theorems stated on a domain with the cone condition, with Herz-Sobolev sources
SOBOLEV_THEOREMS = frozenset({
    TheoremId.EMBEDDINGS_FIRST,
    TheoremId.EMBED_Q_EQ_P,
    TheoremId.EMBED_Q_INFTY,
    TheoremId.EMBED_P_LT_Q,
    TheoremId.EMBED_Q_LT_P,
})


class TheoremParams(BaseModel):
    """Parameter bundle addressed by every theorem predicate.

    Fields are optional; each theorem requires the symbols its hypotheses
    reference. ``alpha1`` doubles as gamma and ``alpha2`` as the classical
    alpha for ``CKNClassical``; ``lam`` is the Riesz order lambda.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    n: Optional[int] = Field(None, ge=1)
    alpha: Optional[float] = Field(None, allow_inf_nan=False)
    alpha1: Optional[float] = Field(None, allow_inf_nan=False)
    alpha2: Optional[float] = Field(None, allow_inf_nan=False)
    alpha3: Optional[float] = Field(None, allow_inf_nan=False)
    sigma: Optional[float] = Field(None, allow_inf_nan=False)
    theta: Optional[float] = Field(None, ge=0.0, le=1.0)
    lam: Optional[float] = Field(None, allow_inf_nan=False)
    m: Optional[int] = Field(None, ge=0)
    p: Optional[Exponent] = None
    q: Optional[Exponent] = None
    u: Optional[Exponent] = None
    r: Optional[Exponent] = None
    s: Optional[Exponent] = None
    v: Optional[Exponent] = None
    q0: Optional[Exponent] = None
    q1: Optional[Exponent] = None

    def updated(self, **changes) -> "TheoremParams":
        """Return a copy with some fields replaced (validated)."""
        data = self.model_dump()
        data.update(changes)
        return TheoremParams.model_validate(data)


class Condition(BaseModel):
    """One evaluated hypothesis: ``lhs relation rhs`` with its numeric slack.

    Strict relations hold exactly when the slack is positive, the others
    when it is non-negative; "=" slack is the tolerance minus |lhs - rhs|.
    """
    model_config = ConfigDict(frozen=True)

    name: str
    lhs: float
    relation: str
    rhs: float
    slack: float
    holds: bool


class HypothesisReport(BaseModel):
    """Outcome of checking one theorem's hypotheses."""
    model_config = ConfigDict(frozen=True)

    theorem: TheoremId
    ok: bool
    violated: List[Condition] = Field(default_factory=list)
    conditions: List[Condition] = Field(default_factory=list)
    derived: Dict[str, float] = Field(
        default_factory=dict,
        description="Exponents computed from the hypotheses (e.g. q in EmbeddingsFirst)"
    )

    @model_validator(mode="after")
    def _ok_iff_no_violation(self) -> "HypothesisReport":
        if self.ok != (len(self.violated) == 0):
            raise ValueError("ok must be true exactly when no condition is violated")
        return self
