"""Health check endpoint."""

from fastapi import APIRouter

from herzkit import __version__
from herzkit.models.results import HealthResponse

router = APIRouter(tags=["health"])


@router.get("/health", response_model=HealthResponse)
async def health_check() -> HealthResponse:
    """Return service status and package version."""
    return HealthResponse(status="ok", version=__version__)
