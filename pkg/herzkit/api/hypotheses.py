"""Hypothesis check endpoint."""

from fastapi import APIRouter
from fastapi.responses import JSONResponse

from herzkit.cli.output import to_jsonable
from herzkit.config import get_config
from herzkit.models.requests import CheckRequest
from herzkit.services.admissibility import check_hypotheses


router = APIRouter()


@router.post("/check")
def check(request: CheckRequest) -> JSONResponse:
    """Evaluate every hypothesis of a theorem for the given parameters."""
    tol = request.tol if request.tol is not None else get_config().equality_tol
    return JSONResponse(content=to_jsonable(check_hypotheses(request.theorem, request.params, tol)))
