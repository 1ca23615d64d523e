"""Configuration management for herzkit.

Settings are loaded from environment variables prefixed with ``HERZKIT_``
(or a ``.env`` file) with validation and defaults. They carry the numerical
defaults of the quadrature, truncation and experiment engines.
"""

import math

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class HerzkitSettings(BaseSettings):
    """Toolkit configuration loaded from environment variables.

    Optional environment variables (with defaults):
    - HERZKIT_THREADS: worker threads for family/annulus evaluation
    - HERZKIT_LOG_LEVEL: logging level
    - HERZKIT_RADIAL_REL_TOL / HERZKIT_GRID_REL_TOL: quadrature tolerances
    - HERZKIT_K_LO / HERZKIT_K_HI / HERZKIT_TAIL_TOL / HERZKIT_HARD_CAP: truncation window
    """

    threads: int = Field(
        default=1,
        description="Worker threads for concurrent family members and dilation levels"
    )

    log_level: str = Field(
        default="INFO",
        description="Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)"
    )

    # Quadrature
    radial_rel_tol: float = Field(
        default=1e-10,
        description="Relative tolerance of the radial 1-D adaptive quadrature"
    )

    grid_rel_tol: float = Field(
        default=1e-4,
        description="Relative tolerance of tensor-grid quadrature"
    )

    max_subdivisions: int = Field(
        default=60,
        description="Panel bisection budget of the adaptive Gauss-Legendre rule"
    )

    quadrature_retry_attempts: int = Field(
        default=3,
        description="Attempts (with doubled budgets) before accepting a non-converged estimate"
    )

    gauss_order: int = Field(
        default=20,
        description="Gauss-Legendre nodes per panel"
    )

    # Truncation of the sum over annuli
    k_lo: int = Field(default=-64, description="Initial lowest annulus index")
    k_hi: int = Field(default=64, description="Initial highest annulus index")
    tail_tol: float = Field(
        default=1e-12,
        description="Stop widening when 8 edge terms contribute less than tail_tol x running norm"
    )
    hard_cap: int = Field(default=256, description="Maximum |k| the window may reach")

    # Predicates and experiments
    equality_tol: float = Field(
        default=1e-12,
        description="Absolute tolerance for equality conditions in admissibility sets"
    )

    dilation_tol: float = Field(
        default=1e-4,
        description="Relative tolerance for ratio invariance across dyadic dilations"
    )

    # Sampled grids and operators
    max_grid_points: int = Field(
        default=2 ** 22,
        description="Largest sampled grid an operator may allocate"
    )

    grid_spacing_floor: float = Field(
        default=2.0 ** -12,
        description="Smallest grid spacing used to sample operator outputs"
    )

    operator_grid_points: int = Field(
        default=33,
        description="Grid nodes per axis for operator outputs fed to Herz norms"
    )

    maximal_levels_below: int = Field(
        default=8,
        description="Dyadic cube sides below the function's scale in the maximal family"
    )

    maximal_levels_above: int = Field(
        default=2,
        description="Dyadic cube sides above the support extent in the maximal family"
    )

    model_config = SettingsConfigDict(
        env_prefix="HERZKIT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    @field_validator("threads", "max_subdivisions", "quadrature_retry_attempts",
                     "operator_grid_points", "max_grid_points")
    @classmethod
    def validate_positive_int(cls, v: int) -> int:
        """Validate that counts are at least 1."""
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @field_validator("gauss_order")
    @classmethod
    def validate_gauss_order(cls, v: int) -> int:
        """Validate that panels use a sensible Gauss-Legendre order."""
        if not 2 <= v <= 200:
            raise ValueError("gauss_order must be between 2 and 200")
        return v

    @field_validator("radial_rel_tol", "grid_rel_tol", "tail_tol", "equality_tol",
                     "dilation_tol", "grid_spacing_floor")
    @classmethod
    def validate_positive_float(cls, v: float) -> float:
        """Validate that tolerances are positive and finite."""
        if not (v > 0 and math.isfinite(v)):
            raise ValueError("must be a positive finite number")
        return v

    @field_validator("hard_cap")
    @classmethod
    def validate_hard_cap(cls, v: int) -> int:
        """Validate that the hard cap leaves room for at least one block of 8 annuli."""
        if v < 8:
            raise ValueError("HARD_CAP must be at least 8")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Accept any standard level name, case-insensitively."""
        level = v.strip().upper()
        if level not in _LOG_LEVELS:
            raise ValueError(f"LOG_LEVEL {v!r} is not one of {'/'.join(_LOG_LEVELS)}")
        return level

    def truncation_window(self) -> tuple[int, int]:
        """Return the initial (k_lo, k_hi) window, clipped to the hard cap."""
        lo = max(self.k_lo, -self.hard_cap)
        hi = min(self.k_hi, self.hard_cap)
        if lo > hi:
            raise ValueError("K_LO must not exceed K_HI")
        return lo, hi


# Global config instance (initialized by load_config or lazily by get_config)
config: HerzkitSettings | None = None


def get_config() -> HerzkitSettings:
    """Get the global configuration instance, loading it on first use.

    Returns:
        HerzkitSettings: The toolkit configuration
    """
    if config is None:
        return load_config()
    return config


def load_config(**overrides) -> HerzkitSettings:
    """Build settings from the environment and install them as the global instance.

    Args:
        **overrides: Explicit values taking precedence over the environment

    Returns:
        HerzkitSettings: The loaded configuration

    Raises:
        ValidationError: If an environment variable is invalid
    """
    global config
    config = HerzkitSettings(**overrides)
    return config
