"""FastAPI application and component wiring.

This module creates the HTTP surface and wires together:
- Settings and structured logging
- The service graph (quadrature, norms, operators, experiments)
- API routers (health, norm, check, embed, counterexample)
- Exception handlers mapping HerzkitError to JSON bodies with a code
"""

from contextlib import asynccontextmanager

from fastapi import FastAPI, Request, status
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from herzkit import __version__
from herzkit.api import experiments, health, hypotheses, norms
from herzkit.config import load_config
from herzkit.exceptions import HerzkitError, PayloadValidationError
from herzkit.logging_config import get_logger, setup_logging
from herzkit.middleware import RequestLoggingMiddleware
from herzkit.services import create_services


logger = get_logger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Load settings, build services and wire them to the routers."""
    config = load_config()
    setup_logging(log_level=config.log_level)

    services = create_services(config)
    norms.set_norm_service(services.norms)
    experiments.set_services(services.embeddings, services.counterexamples)
    logger.info("herzkit server started", extra={"value": __version__})

    yield

    logger.info("herzkit server stopped")


app = FastAPI(
    title="herzkit",
    description="Numerical experiments in homogeneous Herz and Herz-Sobolev spaces",
    version=__version__,
    lifespan=lifespan,
)

app.add_middleware(RequestLoggingMiddleware)

app.include_router(health.router, tags=["health"])
app.include_router(norms.router, tags=["norms"])
app.include_router(hypotheses.router, tags=["hypotheses"])
app.include_router(experiments.router, tags=["experiments"])


# Exception handlers

@app.exception_handler(RequestValidationError)
async def validation_exception_handler(request: Request, exc: RequestValidationError):
    """Return 422 with the pydantic error list."""
    logger.warning(
        "Request validation error",
        extra={"path": request.url.path, "error": str(exc.errors()[:1])}
    )
    return JSONResponse(
        status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
        content={
            "error": "Validation error",
            "detail": [
                {"loc": list(e.get("loc", ())), "msg": e.get("msg", "")} for e in exc.errors()
            ],
            "code": "VALIDATION_ERROR"
        }
    )


@app.exception_handler(PayloadValidationError)
async def payload_validation_handler(request: Request, exc: PayloadValidationError):
    """Return 422 for payloads rejected after request parsing (e.g. family dimension)."""
    logger.warning("Payload rejected", extra={"path": request.url.path, "error": exc.message})
    return JSONResponse(
        status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
        content={"error": exc.message, "detail": exc.reason, "code": exc.code}
    )


@app.exception_handler(HerzkitError)
async def herzkit_error_handler(request: Request, exc: HerzkitError):
    """Return 400 for numerical and parameter errors."""
    logger.warning(
        "Request rejected",
        extra={"path": request.url.path, "error": exc.code}
    )
    return JSONResponse(
        status_code=status.HTTP_400_BAD_REQUEST,
        content={"error": exc.message, "detail": str(exc), "code": exc.code}
    )
