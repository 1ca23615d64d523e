"""Request logging for the HTTP surface.

Each request is logged once on completion under the command it maps to
(``/norm`` -> ``norm``), with its status and compute time. A client-supplied
``X-Request-ID`` is kept so CLI-style batch drivers can correlate lines.
"""

import time
import uuid
from typing import Callable

from fastapi import Request, Response
from starlette.middleware.base import BaseHTTPMiddleware

from herzkit.logging_config import get_logger


logger = get_logger(__name__)

REQUEST_ID_HEADER = "X-Request-ID"
DURATION_HEADER = "X-Duration-Ms"


def command_for(path: str) -> str:
    """Command name for a route path; the health probe and docs map to "http"."""
    head = path.strip("/").split("/", 1)[0]
    return head if head in ("norm", "check", "embed", "counterexample") else "http"


class RequestLoggingMiddleware(BaseHTTPMiddleware):
    """Log one line per request and tag the response with its id and duration."""

    async def dispatch(self, request: Request, call_next: Callable) -> Response:
        request_id = request.headers.get(REQUEST_ID_HEADER) or uuid.uuid4().hex
        request.state.request_id = request_id
        command = command_for(request.url.path)
        start = time.perf_counter()

        try:
            response = await call_next(request)
        except Exception as exc:
            logger.error(
                "Request failed",
                extra={
                    "request_id": request_id,
                    "command": command,
                    "path": request.url.path,
                    "duration_ms": round((time.perf_counter() - start) * 1000, 2),
                    "error": type(exc).__name__,
                },
                exc_info=True
            )
            raise

        duration_ms = round((time.perf_counter() - start) * 1000, 2)
        level = logger.warning if response.status_code >= 400 else logger.info
        level(
            "Request completed",
            extra={
                "request_id": request_id,
                "command": command,
                "method": request.method,
                "status_code": response.status_code,
                "duration_ms": duration_ms,
            }
        )
        response.headers[REQUEST_ID_HEADER] = request_id
        response.headers[DURATION_HEADER] = str(duration_ms)
        return response
