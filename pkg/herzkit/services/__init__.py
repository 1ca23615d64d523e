"""Services package for the numerical layer."""

from dataclasses import dataclass

from herzkit.config import HerzkitSettings
from herzkit.services.counterexample_service import CounterexampleService
from herzkit.services.embedding_service import EmbeddingService
from herzkit.services.norm_service import NormService
from herzkit.services.operator_service import OperatorService
from herzkit.services.quadrature_service import QuadratureService


@dataclass(frozen=True)
class ServiceContainer:
    """All services wired to one settings instance."""
    settings: HerzkitSettings
    quadrature: QuadratureService
    norms: NormService
    operators: OperatorService
    embeddings: EmbeddingService
    counterexamples: CounterexampleService


def create_services(settings: HerzkitSettings) -> ServiceContainer:
    """Build the service graph bottom-up from one settings instance."""
    quadrature = QuadratureService(settings)
    norms = NormService(settings, quadrature)
    operators = OperatorService(settings, norms)
    return ServiceContainer(
        settings=settings,
        quadrature=quadrature,
        norms=norms,
        operators=operators,
        embeddings=EmbeddingService(settings, norms, operators),
        counterexamples=CounterexampleService(settings, norms),
    )


__all__ = [
    "CounterexampleService",
    "EmbeddingService",
    "NormService",
    "OperatorService",
    "QuadratureService",
    "ServiceContainer",
    "create_services",
]
