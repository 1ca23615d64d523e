"""Error hierarchy for herzkit.

This module defines the exceptions raised by the herzkit services, each
carrying a human-readable message and a machine-readable code so that the
CLI and the HTTP surface can map them to exit codes and status codes.
"""

from typing import Optional, Sequence


class HerzkitError(Exception):
    """Base exception for all herzkit errors."""

    def __init__(self, message: str, code: str = "HERZKIT_ERROR"):
        """Store the message and its stable code.

        Args:
            message: Text shown to the user
            code: Code used for exit-code and status mapping
        """
        self.message = message
        self.code = code
        super().__init__(self.message)


class InvalidParameterError(HerzkitError):
    """Raised when a parameter violates an operation's precondition."""

    def __init__(self, name: str, reason: str):
        """Initialize with parameter name and the violated condition.

        Args:
            name: Symbol of the offending parameter
            reason: Description of the violated precondition
        """
        super().__init__(
            message=f"Invalid parameter '{name}': {reason}",
            code="INVALID_PARAMETER"
        )
        self.name = name
        self.reason = reason


class MissingParameterError(HerzkitError):
    """Raised when a theorem bundle lacks a symbol the theorem references."""

    def __init__(self, symbol: str, theorem: str):
        """Initialize with the absent symbol.

        Args:
            symbol: Name of the missing parameter
            theorem: Theorem whose hypotheses reference it
        """
        super().__init__(
            message=f"Parameter '{symbol}' is required by {theorem}",
            code="MISSING_PARAMETER"
        )
        self.symbol = symbol
        self.theorem = theorem


class DimensionMismatchError(HerzkitError):
    """Raised when a point, function or domain live in different dimensions."""

    def __init__(self, expected: int, got: int):
        super().__init__(
            message=f"Dimension mismatch: expected {expected}, got {got}",
            code="DIMENSION_MISMATCH"
        )
        self.expected = expected
        self.got = got


class DimensionUnsupportedError(HerzkitError):
    """Raised when a grid-based computation is requested for n > 3."""

    def __init__(self, n: int, operation: str):
        super().__init__(
            message=f"{operation} needs tensor grids, unsupported in dimension {n} (n <= 3)",
            code="DIMENSION_UNSUPPORTED"
        )
        self.n = n
        self.operation = operation


class UnsupportedVariantError(HerzkitError):
    """Raised when an operation does not apply to a function variant."""

    def __init__(self, variant: str, operation: str):
        super().__init__(
            message=f"{operation} is not supported for variant {variant}",
            code="UNSUPPORTED_VARIANT"
        )
        self.variant = variant
        self.operation = operation


class UndefinedGradientError(HerzkitError):
    """Raised when the gradient is requested where it does not exist."""

    def __init__(self, reason: str):
        super().__init__(
            message=f"Gradient undefined: {reason}",
            code="UNDEFINED_GRADIENT"
        )
        self.reason = reason


class MissingDerivativeError(HerzkitError):
    """Raised when a derivative of some multi-index is not registered."""

    def __init__(self, multi_index: Sequence[int], variant: str):
        """Initialize with the multi-index that has no registered derivative.

        Args:
            multi_index: The multi-index beta of D^beta
            variant: Function variant lacking that derivative
        """
        beta = tuple(int(b) for b in multi_index)
        super().__init__(
            message=f"No derivative D^{beta} registered for variant {variant}",
            code="MISSING_DERIVATIVE"
        )
        self.multi_index = beta
        self.variant = variant


class NonIntegrableSingularityError(HerzkitError):
    """Raised when an integrand has a non-integrable singularity."""

    def __init__(self, where: str, exponent: float):
        super().__init__(
            message=f"Non-integrable singularity at {where} (exponent {exponent:.6g} <= -1)",
            code="NON_INTEGRABLE"
        )
        self.where = where
        self.exponent = exponent


class QuadratureNotConvergedError(HerzkitError):
    """Raised when adaptive quadrature exhausts its subdivision budget."""

    def __init__(self, value: float, err_est: float, subdivisions: int):
        super().__init__(
            message=(
                f"Quadrature did not converge after {subdivisions} subdivisions "
                f"(value {value:.6g}, error estimate {err_est:.3g})"
            ),
            code="QUADRATURE_NOT_CONVERGED"
        )
        self.value = value
        self.err_est = err_est
        self.subdivisions = subdivisions


class NormDivergenceError(HerzkitError):
    """Raised when the annulus terms grow at a truncation edge."""

    def __init__(self, direction: str, partial_value: float):
        """Initialize with the offending direction.

        Args:
            direction: "low" (towards the origin) or "high" (towards infinity)
            partial_value: Norm of the truncated sum
        """
        super().__init__(
            message=f"Norm diverges towards k -> {'-inf' if direction == 'low' else '+inf'} "
                    f"(partial value {partial_value:.6g})",
            code="NORM_DIVERGENCE"
        )
        self.direction = direction
        self.partial_value = partial_value


class GridResolutionError(HerzkitError):
    """Raised when a sampled grid cannot resolve the requested scale."""

    def __init__(self, reason: str):
        super().__init__(
            message=f"Grid resolution insufficient: {reason}",
            code="GRID_RESOLUTION"
        )
        self.reason = reason


class RegionNotDyadicError(HerzkitError):
    """Raised when a projection region is not aligned with dyadic cubes."""

    def __init__(self, j: int, reason: str):
        super().__init__(
            message=f"Region is not aligned with dyadic cubes of level {j}: {reason}",
            code="REGION_NOT_DYADIC"
        )
        self.j = j
        self.reason = reason


class DivergentTailError(HerzkitError):
    """Raised when a function decays too slowly for a convolution kernel."""

    def __init__(self, operation: str):
        super().__init__(
            message=f"{operation}: function decays too slowly for the kernel tail",
            code="DIVERGENT_TAIL"
        )
        self.operation = operation


class RegimeViolationError(HerzkitError):
    """Raised when a counterexample is requested outside its parameter regime."""

    def __init__(self, case: str, reason: str):
        super().__init__(
            message=f"{case}: {reason}",
            code="REGIME_VIOLATION"
        )
        self.case = case
        self.reason = reason


class PayloadValidationError(HerzkitError):
    """Raised when a command payload fails schema validation."""

    def __init__(self, field: str, reason: str, location: Optional[str] = None):
        """Record which payload field failed and why.

        Args:
            field: Top-level payload field
            reason: Validator message
            location: Optional dotted path of the field inside the payload
        """
        super().__init__(
            message=f"Validation error for field '{location or field}': {reason}",
            code="VALIDATION_ERROR"
        )
        self.field = field
        self.reason = reason
        self.location = location or field
