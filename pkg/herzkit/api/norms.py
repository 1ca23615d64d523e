"""Norm endpoint.

POST /norm evaluates one Herz-type norm with the same payload as the
``norm`` CLI command.
"""

from fastapi import APIRouter, HTTPException, status
from fastapi.responses import JSONResponse

from herzkit.cli.output import to_jsonable
from herzkit.models.requests import NormRequest
from herzkit.services.norm_service import NormService


router = APIRouter()

# Injected in main.py
norm_service: NormService = None


def set_norm_service(service: NormService) -> None:
    """Set the norm service instance.

    Args:
        service: NormService instance used by the endpoint
    """
    global norm_service
    norm_service = service


@router.post("/norm", status_code=status.HTTP_200_OK)
def compute_norm(request: NormRequest) -> JSONResponse:
    """Compute a norm.

    A diverging annulus sum is not an error here: the result carries the
    diverging edge in ``divergence``.

    Raises:
        HTTPException: 500 if the service is not initialized
    """
    if norm_service is None:
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail="Norm service not initialized"
        )
    return JSONResponse(content=to_jsonable(norm_service.evaluate(request)))
