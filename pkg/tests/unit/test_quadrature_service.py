"""Unit tests for QuadratureService."""

import math

import numpy as np
import pytest

from herzkit.exceptions import (
    DimensionMismatchError,
    NonIntegrableSingularityError,
    UnsupportedVariantError,
)
from herzkit.models.functions import (
    AnnulusRange,
    Ball,
    GaussianSpec,
    RadialPowerLog,
    SmoothBump,
)
from herzkit.models.results import QuadratureOptions


@pytest.fixture
def ball_indicator():
    """Indicator of the open unit disc."""
    return RadialPowerLog(n=2, a=0.0, r_hi=1.0)


def test_indicator_mass_on_annulus(quadrature, ball_indicator):
    """||chi_B chi_{C_0}||_2 is the square root of the area of C_0."""
    mass = quadrature.annulus_lp_norm(ball_indicator, 0, 2.0)

    assert mass.k == 0
    assert mass.converged
    assert mass.value == pytest.approx(math.sqrt(3.0 * math.pi / 4.0), rel=1e-10)


def test_weighted_mass(quadrature, ball_indicator):
    """The |x|^w weight is folded into the integrand."""
    mass = quadrature.annulus_lp_norm(ball_indicator, 0, 2.0, weight=1.0)

    assert mass.value == pytest.approx(math.sqrt(15.0 * math.pi / 32.0), rel=1e-10)


def test_annulus_outside_support_is_zero(quadrature, ball_indicator):
    """Annuli beyond the support carry no mass."""
    mass = quadrature.annulus_lp_norm(ball_indicator, 3, 2.0)

    assert mass.value == 0.0
    assert mass.err_est == 0.0


def test_supremum_on_annulus(quadrature):
    """p = inf returns the supremum of |x|^-1 over C_{-1}."""
    f = RadialPowerLog(n=2, a=-1.0, r_hi=1.0)

    mass = quadrature.annulus_lp_norm(f, -1, math.inf)

    assert mass.value == pytest.approx(4.0, rel=1e-12)


def test_oracle_agrees_with_radial_path(quadrature):
    """The scipy oracle and the radial rule agree on a power-log shell."""
    f = RadialPowerLog(n=2, a=-0.5, b=1.0, r_lo=0.5, r_hi=2.0)
    oracle = QuadratureOptions(mode="oracle_exact")

    for k in (0, 1):
        radial = quadrature.annulus_lp_norm(f, k, 2.0)
        exact = quadrature.annulus_lp_norm(f, k, 2.0, opts=oracle)
        assert radial.value == pytest.approx(exact.value, rel=1e-8)


def test_oracle_rejects_other_variants(quadrature):
    """Only RadialPowerLog has an oracle."""
    f = GaussianSpec(center=[0.0, 0.0], scale=1.0)

    with pytest.raises(UnsupportedVariantError):
        quadrature.annulus_lp_norm(f, 0, 2.0, opts=QuadratureOptions(mode="oracle_exact"))


def test_tensor_path_matches_radial_path(quadrature):
    """Polar tensor quadrature reproduces the radial value within the grid tolerance."""
    f = GaussianSpec(center=[0.0, 0.0], scale=1.0)

    radial = quadrature.annulus_lp_norm(f, 0, 2.0)
    tensor = quadrature.annulus_lp_norm(f, 0, 2.0, opts=QuadratureOptions(mode="tensor_grid"))

    assert tensor.value == pytest.approx(radial.value, rel=1e-3)


def test_translation_invariance_in_tensor_path(quadrature, norm_service):
    """An off-center bump inside one annulus has the L^2 norm of the centered bump."""
    centered = SmoothBump(center=[0.0, 0.0], radius=0.25)
    shifted = SmoothBump(center=[0.75, 0.0], radius=0.25)

    # The shifted support lies within C_0 = {1/2 <= |x| < 1}
    mass = quadrature.annulus_lp_norm(shifted, 0, 2.0)

    assert mass.value == pytest.approx(norm_service.lebesgue_norm(centered, 2.0).value, rel=1e-3)


def test_gradient_mass_of_gaussian(quadrature):
    """Gradient mass of a centered Gaussian matches the closed form on C_1."""
    f = GaussianSpec(center=[0.0, 0.0], scale=1.0)
    # integral of 4 r^2 exp(-2 r^2) 2 pi r dr over [1, 2]
    def antiderivative(r):
        return -math.pi * (2.0 * r ** 2 + 1.0) * math.exp(-2.0 * r ** 2)
    expected = math.sqrt(antiderivative(2.0) - antiderivative(1.0))

    mass = quadrature.annulus_gradient_norm(f, 1, 2.0)

    assert mass.value == pytest.approx(expected, rel=1e-9)


def test_restricted_to_ball(quadrature, ball_indicator):
    """A centered ball domain cuts the annulus radially."""
    mass = quadrature.annulus_lp_norm(ball_indicator, 0, 1.0, omega=Ball(center=[0.0, 0.0], radius=0.75))

    assert mass.value == pytest.approx(math.pi * (0.75 ** 2 - 0.25), rel=1e-10)


def test_restricted_to_annulus_range(quadrature, ball_indicator):
    """Annuli outside an AnnulusRange domain vanish."""
    omega = AnnulusRange(k_min=0, k_max=0)

    assert quadrature.annulus_lp_norm(ball_indicator, -1, 2.0, omega=omega).value == 0.0
    assert quadrature.annulus_lp_norm(ball_indicator, 0, 2.0, omega=omega).value > 0.0


def test_non_integrable_log_singularity(quadrature):
    """|log|x||^-1 in L^1 across |x| = 1 is rejected."""
    f = RadialPowerLog(n=1, a=0.0, b=-1.0, r_lo=0.5, r_hi=2.0)

    with pytest.raises(NonIntegrableSingularityError) as exc_info:
        quadrature.annulus_lp_norm(f, 1, 1.0)

    assert exc_info.value.code == "NON_INTEGRABLE"


def test_integrable_log_singularity(quadrature):
    """|log|x||^-1/2 is integrable and matches the oracle."""
    f = RadialPowerLog(n=1, a=0.0, b=-0.5, r_lo=0.5, r_hi=2.0)

    radial = quadrature.annulus_lp_norm(f, 1, 1.0)
    exact = quadrature.annulus_lp_norm(f, 1, 1.0, opts=QuadratureOptions(mode="oracle_exact"))

    assert math.isfinite(radial.value)
    assert radial.value == pytest.approx(exact.value, rel=1e-6)


def test_domain_dimension_mismatch(quadrature, ball_indicator):
    """A domain in another dimension is rejected."""
    with pytest.raises(DimensionMismatchError):
        quadrature.annulus_lp_norm(ball_indicator, 0, 2.0, omega=Ball(center=[0.0, 0.0, 0.0], radius=1.0))


def test_profile_annulus_norm(quadrature):
    """A radial profile over the full space matches the mass of the Gaussian itself."""
    f = GaussianSpec(center=[0.0, 0.0, 0.0], scale=1.0)

    direct = quadrature.annulus_lp_norm(f, 0, 3.0)
    profile = quadrature.profile_annulus_norm(lambda r: np.exp(-r ** 2), 3, 0, 3.0)

    assert profile.value == pytest.approx(direct.value, rel=1e-12)
