"""Data models for herzkit."""

from herzkit.models.functions import (
    AnnulusRange,
    Ball,
    Cube,
    DomainSpec,
    FiniteSum,
    FullSpace,
    FunctionSpec,
    GaussianSpec,
    RadialPowerLog,
    SampledGrid,
    SmoothBump,
    SmoothPlateau,
)
from herzkit.models.params import (
    CKNParams,
    HerzParams,
    HypothesisReport,
    SobolevParams,
    TheoremId,
    TheoremParams,
)
from herzkit.models.requests import (
    CheckRequest,
    CounterexampleRequest,
    EmbedRequest,
    NormRequest,
    OperatorRequest,
    ReportRequest,
    RunConfig,
)
from herzkit.models.results import (
    EmbeddingExperiment,
    EmbeddingReport,
    NormResult,
    OperatorResult,
    QuadratureOptions,
    TruncationPolicy,
)

__all__ = [
    # Functions and domains
    "AnnulusRange",
    "Ball",
    "Cube",
    "DomainSpec",
    "FiniteSum",
    "FullSpace",
    "FunctionSpec",
    "GaussianSpec",
    "RadialPowerLog",
    "SampledGrid",
    "SmoothBump",
    "SmoothPlateau",
    # Parameters
    "CKNParams",
    "HerzParams",
    "HypothesisReport",
    "SobolevParams",
    "TheoremId",
    "TheoremParams",
    # Payloads
    "CheckRequest",
    "CounterexampleRequest",
    "EmbedRequest",
    "NormRequest",
    "OperatorRequest",
    "ReportRequest",
    "RunConfig",
    # Results
    "EmbeddingExperiment",
    "EmbeddingReport",
    "NormResult",
    "OperatorResult",
    "QuadratureOptions",
    "TruncationPolicy",
]
