"""Structured key=value logging for herzkit.

Lines look like ``timestamp=... level=INFO logger=herzkit.services.norm_service
message="Herz norm computed" k=-3 value=0.123456789012`` so that long
experiment runs can be filtered by annulus, theorem, function index or
command. Fields bound with ``run_context`` (command, seed) are attached to
every line logged while the block is active.
"""

import contextlib
import contextvars
import logging
import math
import sys
from typing import Any, Dict, Iterator

# Extra attributes rendered when present on a record
_EXTRA_FIELDS = (
    "command",
    "theorem",
    "function_index",
    "dilation",
    "k",
    "variant",
    "value",
    "err_est",
    "direction",
    "request_id",
    "method",
    "path",
    "status_code",
    "duration_ms",
    "error",
)

_run_fields: contextvars.ContextVar[Dict[str, Any]] = contextvars.ContextVar(
    "herzkit_run_fields", default={}
)


def _render(value: Any) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.12g}"
    text = str(value)
    if not text or any(c.isspace() or c == '"' for c in text):
        return '"' + text.replace('"', '\\"') + '"'
    return text


class StructuredFormatter(logging.Formatter):
    """Render records as key=value pairs, quoting values with spaces."""

    def format(self, record: logging.LogRecord) -> str:
        fields: Dict[str, Any] = {
            "timestamp": self.formatTime(record, self.datefmt),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        fields.update(_run_fields.get())
        for name in _EXTRA_FIELDS:
            if hasattr(record, name):
                fields[name] = getattr(record, name)

        line = " ".join(f"{key}={_render(value)}" for key, value in fields.items())
        if record.exc_info:
            line += "\n" + self.formatException(record.exc_info)
        return line


@contextlib.contextmanager
def run_context(**fields: Any) -> Iterator[None]:
    """Attach ``fields`` to every record formatted inside the block."""
    token = _run_fields.set({**_run_fields.get(), **fields})
    try:
        yield
    finally:
        _run_fields.reset(token)


def setup_logging(log_level: str = "INFO") -> None:
    """Send every record to stderr through StructuredFormatter.

    Reports go to files and stdout stays free for piping.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
    """
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(StructuredFormatter(datefmt="%Y-%m-%dT%H:%M:%S"))

    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(getattr(logging, log_level.upper(), logging.INFO))
    logging.getLogger("uvicorn.access").setLevel(logging.WARNING)


def get_logger(name: str) -> logging.Logger:
    """Module logger, used as ``logger = get_logger(__name__)``."""
    return logging.getLogger(name)
