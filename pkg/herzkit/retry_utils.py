"""Retry utilities for adaptive quadrature.

Adaptive rules raise ``QuadratureNotConvergedError`` when their subdivision
budget runs out. This module retries them with tenacity, doubling the budget
on every attempt, and hands the last partial estimate back to the caller
when every attempt fails.
"""

import logging
from typing import Callable, Tuple, TypeVar

from tenacity import (
    Retrying,
    before_sleep_log,
    retry_if_exception_type,
    stop_after_attempt,
    wait_none,
)

from herzkit.exceptions import QuadratureNotConvergedError
from herzkit.logging_config import get_logger


logger = get_logger(__name__)

T = TypeVar("T")


def integrate_with_escalation(
    integrate: Callable[[int], T],
    budget: int,
    attempts: int = 3,
) -> T:
    """Run an adaptive integration, doubling its budget on non-convergence.

    Args:
        integrate: Callable taking a subdivision budget and returning a result
        budget: Subdivision budget of the first attempt
        attempts: Maximum number of attempts

    Returns:
        The first converged result

    Raises:
        QuadratureNotConvergedError: If the last attempt still did not converge
    """
    retrying = Retrying(
        retry=retry_if_exception_type(QuadratureNotConvergedError),
        stop=stop_after_attempt(attempts),
        wait=wait_none(),
        before_sleep=before_sleep_log(logger, logging.DEBUG),
        reraise=True,
    )
    for attempt in retrying:
        with attempt:
            scaled = budget * 2 ** (attempt.retry_state.attempt_number - 1)
            return integrate(scaled)
    raise AssertionError("unreachable: tenacity re-raises the last error")


def best_effort(
    integrate: Callable[[int], Tuple[float, float]],
    budget: int,
    attempts: int = 3,
    context: str = "quadrature",
) -> Tuple[float, float, bool]:
    """Escalate an integration and fall back to its partial estimate.

    Args:
        integrate: Callable taking a budget and returning (value, err_est)
        budget: Subdivision budget of the first attempt
        attempts: Maximum number of attempts
        context: Label used in the warning log

    Returns:
        Tuple of (value, err_est, converged)
    """
    try:
        value, err = integrate_with_escalation(integrate, budget, attempts)
        return value, err, True
    except QuadratureNotConvergedError as e:
        logger.warning(
            f"Accepting non-converged {context} estimate",
            extra={"value": e.value, "err_est": e.err_est}
        )
        return e.value, e.err_est, False
