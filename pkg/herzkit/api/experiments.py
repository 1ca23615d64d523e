"""Experiment endpoints.

POST /embed runs one embedding experiment; POST /counterexample builds one
of the two L^1_loc counterexample tables. Both run synchronously in the
worker thread pool.
"""

from fastapi import APIRouter, HTTPException, status
from fastapi.responses import JSONResponse

from herzkit.cli.output import to_jsonable
from herzkit.models.requests import CounterexampleRequest, EmbedRequest
from herzkit.services.counterexample_service import CounterexampleService
from herzkit.services.embedding_service import EmbeddingService, build_experiment


router = APIRouter()

# Injected in main.py
embedding_service: EmbeddingService = None
counterexample_service: CounterexampleService = None


def set_services(embeddings: EmbeddingService, counterexamples: CounterexampleService) -> None:
    """Set the service instances used by the experiment endpoints.

    Args:
        embeddings: EmbeddingService instance
        counterexamples: CounterexampleService instance
    """
    global embedding_service, counterexample_service
    embedding_service = embeddings
    counterexample_service = counterexamples


def _require(service, name: str):
    if service is None:
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail=f"{name} not initialized"
        )
    return service


@router.post("/embed")
def embed(request: EmbedRequest) -> JSONResponse:
    """Run an embedding experiment and return its report.

    Random family members are drawn with seed 0 so repeated requests agree.
    """
    service = _require(embedding_service, "Embedding service")
    report = service.run_embedding(build_experiment(request), request.truncation, request.quadrature)
    return JSONResponse(content=to_jsonable(report))


@router.post("/counterexample")
def counterexample(request: CounterexampleRequest) -> JSONResponse:
    """Build a counterexample table."""
    service = _require(counterexample_service, "Counterexample service")
    return JSONResponse(content=to_jsonable(service.evaluate(request)))
