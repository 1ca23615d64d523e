"""Test-function families and domains.

Function specs are immutable pydantic models discriminated by ``variant``;
domains are discriminated by ``kind``. Both round-trip through JSON.
"""

import math
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PrivateAttr,
    field_validator,
    model_validator,
)


class _Spec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class RadialPowerLog(_Spec):
    """f(x) = A |x|^a |log|x| + c|^b on r_lo < |x| < r_hi, zero elsewhere.

    Where the log factor vanishes (|x| = e^{-c}) the value is 0 for b != 0;
    for b = 0 the log factor is identically 1.
    """
    variant: Literal["RadialPowerLog"] = "RadialPowerLog"
    n: int = Field(..., ge=1)
    a: float = Field(..., allow_inf_nan=False)
    b: float = Field(0.0, allow_inf_nan=False)
    r_lo: float = Field(0.0, ge=0.0, allow_inf_nan=False)
    r_hi: float = Field(..., gt=0.0, allow_inf_nan=False)
    amplitude: float = Field(1.0, allow_inf_nan=False)
    log_offset: float = Field(0.0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _check_support(self) -> "RadialPowerLog":
        if not self.r_hi > self.r_lo:
            raise ValueError("r_hi must exceed r_lo")
        return self

    @property
    def dim(self) -> int:
        return self.n

    @property
    def log_zero_radius(self) -> float:
        """Radius where log|x| + c vanishes."""
        return math.exp(-self.log_offset)


class SmoothBump(_Spec):
    """A exp(1 - 1/(1 - |x-c|^2/R^2)) inside B(c, R), zero outside."""
    variant: Literal["SmoothBump"] = "SmoothBump"
    center: List[float] = Field(..., min_length=1)
    radius: float = Field(..., gt=0.0, allow_inf_nan=False)
    amplitude: float = Field(1.0, allow_inf_nan=False)

    @property
    def dim(self) -> int:
        return len(self.center)


class SmoothPlateau(_Spec):
    """Equal to A on |x-c| <= inner_radius, C-infinity step down to 0 at outer_radius.

    ``inner_radius == outer_radius`` gives the sharp indicator of the closed ball.
    """
    variant: Literal["SmoothPlateau"] = "SmoothPlateau"
    center: List[float] = Field(..., min_length=1)
    inner_radius: float = Field(..., gt=0.0, allow_inf_nan=False)
    outer_radius: float = Field(..., gt=0.0, allow_inf_nan=False)
    amplitude: float = Field(1.0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _check_radii(self) -> "SmoothPlateau":
        if self.outer_radius < self.inner_radius:
            raise ValueError("outer_radius must be at least inner_radius")
        return self

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def sharp(self) -> bool:
        return self.outer_radius == self.inner_radius


class GaussianSpec(_Spec):
    """A exp(-|x-c|^2 / s^2)."""
    variant: Literal["Gaussian"] = "Gaussian"
    center: List[float] = Field(..., min_length=1)
    scale: float = Field(..., gt=0.0, allow_inf_nan=False)
    amplitude: float = Field(1.0, allow_inf_nan=False)

    @property
    def dim(self) -> int:
        return len(self.center)


class SampledGrid(_Spec):
    """Values on a regular grid over an axis-aligned box (n <= 3).

    ``node`` layout: values at the nodes lo + i*h, multilinear interpolation.
    ``cell`` layout: one value per cell [lo + i*h, lo + (i+1)*h), piecewise constant.
    Values are stored row-major (last axis fastest); zero outside the box.
    """
    variant: Literal["SampledGrid"] = "SampledGrid"
    n: int = Field(..., ge=1, le=3)
    lo: List[float]
    hi: List[float]
    spacing: float = Field(..., gt=0.0, allow_inf_nan=False)
    values: List[float]
    layout: Literal["node", "cell"] = "node"

    _array: Optional[np.ndarray] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_shape(self) -> "SampledGrid":
        if len(self.lo) != self.n or len(self.hi) != self.n:
            raise ValueError("lo and hi must have n entries")
        counts = self.counts
        if any(c < 1 for c in counts):
            raise ValueError("grid box must hold at least one sample per axis")
        if len(self.values) != int(np.prod(counts)):
            raise ValueError(
                f"values has {len(self.values)} entries, expected {int(np.prod(counts))}"
            )
        return self

    @property
    def dim(self) -> int:
        return self.n

    @property
    def counts(self) -> Tuple[int, ...]:
        """Samples per axis."""
        out = []
        for lo, hi in zip(self.lo, self.hi):
            cells = (hi - lo) / self.spacing
            if abs(cells - round(cells)) > 1e-9 * max(1.0, abs(cells)):
                raise ValueError("box extent must be a multiple of the spacing")
            out.append(int(round(cells)) + (1 if self.layout == "node" else 0))
        return tuple(out)

    def array(self) -> np.ndarray:
        """Values reshaped to the per-axis counts (cached)."""
        if self._array is None:
            self._array = np.asarray(self.values, dtype=float).reshape(self.counts)
        return self._array


MemberSpec = Annotated[
    Union[RadialPowerLog, SmoothBump, SmoothPlateau, GaussianSpec, SampledGrid],
    Field(discriminator="variant"),
]


class FiniteSum(_Spec):
    """Pointwise sum of closed-form or sampled members in one dimension."""
    variant: Literal["FiniteSum"] = "FiniteSum"
    members: List[MemberSpec] = Field(..., min_length=1)

    @field_validator("members")
    @classmethod
    def _same_dimension(cls, members):
        dims = {m.dim for m in members}
        if len(dims) != 1:
            raise ValueError(f"all members must share one dimension, got {sorted(dims)}")
        return members

    @property
    def dim(self) -> int:
        return self.members[0].dim


FunctionSpec = Annotated[
    Union[RadialPowerLog, SmoothBump, SmoothPlateau, GaussianSpec, SampledGrid, FiniteSum],
    Field(discriminator="variant"),
]

CLOSED_FORM = (RadialPowerLog, SmoothBump, SmoothPlateau, GaussianSpec)


def gradient_available(f) -> bool:
    """True when an analytic (or finite-difference, for grids) gradient exists."""
    if isinstance(f, FiniteSum):
        return all(gradient_available(m) for m in f.members)
    if isinstance(f, SmoothPlateau):
        return not f.sharp
    return True


# Domains

class _DomainBase(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    cone_condition: bool = Field(
        True, description="Built-in domains satisfy the cone condition"
    )
    cone_height: Optional[float] = Field(None, gt=0.0, description="Cone height (metadata)")
    cone_aperture: Optional[float] = Field(
        None, gt=0.0, lt=math.pi, description="Cone aperture angle (metadata)"
    )


class FullSpace(_DomainBase):
    kind: Literal["FullSpace"] = "FullSpace"

    @property
    def contains_origin(self) -> bool:
        return True


class Ball(_DomainBase):
    kind: Literal["Ball"] = "Ball"
    center: List[float] = Field(..., min_length=1)
    radius: float = Field(..., gt=0.0, allow_inf_nan=False)

    @property
    def contains_origin(self) -> bool:
        return float(np.linalg.norm(self.center)) < self.radius


class AnnulusRange(_DomainBase):
    """Union of the dyadic annuli C_k for k_min <= k <= k_max."""
    kind: Literal["AnnulusRange"] = "AnnulusRange"
    k_min: int
    k_max: int

    @model_validator(mode="after")
    def _ordered(self) -> "AnnulusRange":
        if self.k_min > self.k_max:
            raise ValueError("k_min must not exceed k_max")
        return self

    @property
    def contains_origin(self) -> bool:
        return False


class Cube(_DomainBase):
    """Axis-aligned cube [corner, corner + side)^n."""
    kind: Literal["Cube"] = "Cube"
    corner: List[float] = Field(..., min_length=1)
    side: float = Field(..., gt=0.0, allow_inf_nan=False)

    @property
    def contains_origin(self) -> bool:
        return all(c < 0.0 < c + self.side for c in self.corner)


DomainSpec = Annotated[
    Union[FullSpace, Ball, AnnulusRange, Cube],
    Field(discriminator="kind"),
]


class DecayHint(BaseModel):
    """How annulus masses behave beyond the reported index range."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["compact", "gaussian", "power"]
    exponent: Optional[float] = Field(None, description="Power a for power-law profiles")


class SupportAnnuli(BaseModel):
    """Index range [k_min, k_max] of annuli carrying mass; None means unbounded."""
    model_config = ConfigDict(frozen=True)

    k_min: Optional[int] = None
    k_max: Optional[int] = None
    decay: DecayHint
