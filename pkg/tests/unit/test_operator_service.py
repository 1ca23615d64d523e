"""Unit tests for OperatorService."""

import math

import numpy as np
import pytest

from herzkit.exceptions import (
    DimensionMismatchError,
    GridResolutionError,
    InvalidParameterError,
    RegionNotDyadicError,
)
from herzkit.models.functions import (
    Cube,
    DecayHint,
    FiniteSum,
    GaussianSpec,
    RadialPowerLog,
    SampledGrid,
    SmoothBump,
    SmoothPlateau,
    SupportAnnuli,
)
from herzkit.models.params import HerzParams
from herzkit.services import function_library as fl
from herzkit.services.operator_service import mollifier_rule
from herzkit.numerics import sphere_area


# Mollification

@pytest.mark.parametrize("n", [1, 2, 3])
def test_mollifier_weights_normalized(n):
    """Weights times the sphere area sum to one."""
    rho, W = mollifier_rule(n, 0.5)

    assert np.all(rho > 0.0) and np.all(rho < 0.5)
    assert float(np.sum(W)) * sphere_area(n) == pytest.approx(1.0, rel=1e-12)


def test_mollify_reproduces_constants_radial(operator_service):
    """Inside a plateau the mollified value is exactly the plateau height."""
    f = SmoothPlateau(center=[0.0, 0.0], inner_radius=2.0, outer_radius=3.0)

    value = operator_service.mollify(f, 0.5, [0.3, 0.1])

    assert value == pytest.approx(1.0, rel=1e-12)


def test_mollify_reproduces_constants_off_center(operator_service):
    """The sphere-rule path reproduces constants as well."""
    f = SmoothPlateau(center=[0.3, 0.1], inner_radius=2.0, outer_radius=3.0)

    value = operator_service.mollify(f, 0.5, [0.0, 0.0])

    assert value == pytest.approx(1.0, rel=1e-12)


def test_mollify_is_positive_and_smoothing(operator_service):
    """Mollifying a Gaussian keeps it positive and lowers its peak."""
    f = GaussianSpec(center=[0.0, 0.0], scale=1.0)

    values = operator_service.mollify_many(f, 0.25, [[0.0, 0.0], [1.0, 0.5], [3.0, 0.0]])

    assert np.all(values > 0.0)
    assert values[0] < 1.0
    assert values[0] == pytest.approx(1.0, abs=0.05)


def test_mollify_rejects_bad_eps(operator_service):
    """eps must be positive."""
    f = GaussianSpec(center=[0.0], scale=1.0)

    with pytest.raises(InvalidParameterError) as exc_info:
        operator_service.mollify(f, 0.0, [0.0])

    assert exc_info.value.name == "eps"


def test_mollify_error_shrinks_with_eps(operator_service):
    """||J_eps * f - f|| decreases as eps does."""
    f = SmoothBump(center=[0.0, 0.0], radius=1.0)
    hp = HerzParams(alpha=0.0, p=2.0, q=2.0, n=2)

    coarse = operator_service.mollify_error_norm(f, 0.25, hp).value
    fine = operator_service.mollify_error_norm(f, 0.125, hp).value

    assert 0.0 < fine < coarse


def test_mollify_error_below_spacing_floor(operator_service):
    """eps/4 under the grid spacing floor is refused."""
    f = SmoothBump(center=[0.0], radius=1.0)

    with pytest.raises(GridResolutionError) as exc_info:
        operator_service.mollify_error_norm(f, 2.0 ** -13, HerzParams(alpha=0.0, p=2.0, q=2.0, n=1))

    assert exc_info.value.code == "GRID_RESOLUTION"


def test_output_grid_is_dyadic_box(operator_service):
    """The output grid spans [-2^K, 2^K] with K fixed by the support."""
    f = SmoothBump(center=[0.0], radius=1.0)

    grid = operator_service.output_grid(f, lambda X: fl.evaluate_many(f, X))

    assert grid.lo == [-2.0]
    assert grid.hi == [2.0]
    assert grid.spacing == 0.125
    assert len(grid.values) == 33
    assert grid.values[16] == pytest.approx(1.0)


# Maximal functions

def test_maximal_at_gaussian_peak(operator_service):
    """Small centered cubes average to almost the peak; no average exceeds it."""
    f = GaussianSpec(center=[0.0, 0.0], scale=1.0)

    value = operator_service.maximal(f, [0.0, 0.0])

    assert 0.999 < value <= 1.0 + 1e-12


def test_maximal_dominates_function(operator_service):
    """M f(x) is at least about |f(x)| by Lebesgue differentiation."""
    f = SmoothBump(center=[0.0, 0.0], radius=1.0)
    x = [0.5, 0.0]

    assert operator_service.maximal(f, x) >= 0.99 * fl.evaluate(f, x)


def test_maximal_positive_outside_support(operator_service):
    """Large cubes reach the support from far away."""
    f = SmoothBump(center=[0.0], radius=1.0)

    assert operator_service.maximal(f, [5.0]) > 0.0


def test_fractional_maximal_dominates_maximal(operator_service):
    """(M |f|^2)^{1/2} >= M f over the same cube family."""
    f = SmoothBump(center=[0.0], radius=1.0)

    m1 = operator_service.maximal(f, [0.7])
    m2 = operator_service.frac_maximal(f, 2.0, [0.7])

    assert m2 >= m1 * (1.0 - 1e-12)


def test_fractional_maximal_rejects_bad_t(operator_service):
    """t must be positive."""
    f = SmoothBump(center=[0.0], radius=1.0)

    with pytest.raises(InvalidParameterError):
        operator_service.frac_maximal(f, 0.0, [0.0])


# Riesz potential

def test_riesz_of_interval_indicator(operator_service):
    """I_{1/2} chi_(-1,1)(0) = integral of |y|^{-1/2} over (-1, 1) = 4."""
    f = RadialPowerLog(n=1, a=0.0, r_hi=1.0)

    assert operator_service.riesz(f, 0.5, [0.0]) == pytest.approx(4.0, rel=1e-10)


def test_riesz_of_ball_indicator(operator_service):
    """I_lambda chi_B(0) = |S^{n-1}| / lambda."""
    f = RadialPowerLog(n=3, a=0.0, r_hi=1.0)

    assert operator_service.riesz(f, 1.0, [0.0, 0.0, 0.0]) == pytest.approx(4.0 * math.pi, rel=1e-10)


@pytest.mark.parametrize("lam", [0.0, 2.0, 3.5])
def test_riesz_rejects_bad_lambda(operator_service, lam):
    """lambda must lie in (0, n)."""
    f = GaussianSpec(center=[0.0, 0.0], scale=1.0)

    with pytest.raises(InvalidParameterError):
        operator_service.riesz(f, lam, [0.0, 0.0])


def test_riesz_far_from_support(operator_service):
    """Far from a Gaussian the potential is its mass times |x|^{lambda - n}."""
    f = GaussianSpec(center=[0.0], scale=1.0)

    value = operator_service.riesz(f, 0.5, [1024.0])

    assert value == pytest.approx(math.sqrt(math.pi) / 32.0, rel=1e-4)


def test_riesz_profile_is_radial(operator_service):
    """For radial data the potential depends on |x| only."""
    f = GaussianSpec(center=[0.0, 0.0], scale=1.0)
    profile = operator_service.riesz_profile(f, 1.0)

    along_first_axis = profile(np.array([0.5]))[0]
    along_second_axis = operator_service.riesz(f, 1.0, [0.0, 0.5])

    assert along_first_axis > 0.0
    assert along_first_axis == pytest.approx(along_second_axis, rel=1e-12)


# Dyadic projection

def test_dyadic_project_constant(operator_service):
    """Averages of a function constant on the region are that constant."""
    f = SmoothPlateau(center=[0.0, 0.0], inner_radius=10.0, outer_radius=11.0)

    grid = operator_service.dyadic_project(f, 2, Cube(corner=[0.0, 0.0], side=1.0))

    assert grid.layout == "cell"
    assert grid.counts == (4, 4)
    assert grid.values == pytest.approx([1.0] * 16, rel=1e-12)


def test_dyadic_project_block_averages_cell_grid(operator_service):
    """A finer cell grid is averaged block by block, exactly."""
    f = SampledGrid(n=1, lo=[0.0], hi=[1.0], spacing=0.25, values=[1.0, 2.0, 3.0, 4.0], layout="cell")

    grid = operator_service.dyadic_project(f, 1, Cube(corner=[0.0], side=1.0))

    assert grid.values == [1.5, 3.5]


def test_dyadic_project_linear_function(operator_service):
    """The 4-point rule averages a linear node grid exactly."""
    f = SampledGrid(n=1, lo=[0.0], hi=[1.0], spacing=1.0, values=[0.0, 1.0])

    grid = operator_service.dyadic_project(f, 2, Cube(corner=[0.0], side=1.0))

    assert grid.values == pytest.approx([0.125, 0.375, 0.625, 0.875], rel=1e-12)


def test_dyadic_project_rejects_misaligned_side(operator_service):
    """The region side must be a multiple of 2^-j."""
    f = GaussianSpec(center=[0.0], scale=1.0)

    with pytest.raises(RegionNotDyadicError) as exc_info:
        operator_service.dyadic_project(f, 2, Cube(corner=[0.0], side=0.3))

    assert exc_info.value.j == 2


def test_dyadic_project_rejects_misaligned_corner(operator_service):
    """The region corner must lie on the 2^-j lattice."""
    f = GaussianSpec(center=[0.0], scale=1.0)

    with pytest.raises(RegionNotDyadicError):
        operator_service.dyadic_project(f, 1, Cube(corner=[0.1], side=0.5))


def test_dyadic_project_dimension_mismatch(operator_service):
    """Region and function must share a dimension."""
    f = GaussianSpec(center=[0.0], scale=1.0)

    with pytest.raises(DimensionMismatchError):
        operator_service.dyadic_project(f, 1, Cube(corner=[0.0, 0.0], side=1.0))


# Mollifier ladder

def test_mollify_error_ladder(operator_service, norm_service):
    """Halving eps from 2^-3 to 2^-10 shrinks ||J_eps * f - f|| every step."""
    f = SmoothBump(center=[0.0, 0.0], radius=1.0)
    hp = HerzParams(alpha=0.0, p=2.0, q=2.0, n=2)

    errors = [operator_service.mollify_error_norm(f, 2.0 ** -j, hp).value for j in range(3, 11)]

    assert all(b < a for a, b in zip(errors[:-1], errors[1:]))
    assert errors[-1] < 1e-2 * norm_service.herz_norm(f, hp).value


# Maximal function laws at random points

def _random_points(seed, count=100):
    return np.random.default_rng(seed).uniform(-4.0, 4.0, size=(count, 1))


def test_maximal_is_sublinear(operator_service):
    """M(f + g) <= M f + M g for same-scale nonnegative Gaussians."""
    rng = np.random.default_rng(3)
    f, g = (
        GaussianSpec(center=[float(rng.uniform(-1.0, 1.0))], scale=1.0,
                     amplitude=float(rng.uniform(0.5, 2.0)))
        for _ in range(2)
    )
    X = _random_points(4)

    total = operator_service.maximal_many(FiniteSum(members=[f, g]), X)
    bound = operator_service.maximal_many(f, X) + operator_service.maximal_many(g, X)

    assert np.all(total <= bound * (1.0 + 1e-4) + 1e-12)


def test_maximal_orders_by_exponent(operator_service):
    """M f <= M_2 f <= M_3 f pointwise."""
    f = SmoothBump(center=[0.3], radius=1.0)
    X = _random_points(5)

    m1 = operator_service.maximal_many(f, X)
    m2 = operator_service.maximal_many(f, X, 2.0)
    m3 = operator_service.maximal_many(f, X, 3.0)

    assert np.all(m1 <= m2 * (1.0 + 1e-12))
    assert np.all(m2 <= m3 * (1.0 + 1e-12))


@pytest.mark.parametrize("m", [-2, -1, 0, 1, 2])
def test_maximal_commutes_with_dilation(operator_service, m):
    """M(f(2^m .))(x) = M f(2^m x)."""
    f = GaussianSpec(center=[0.5], scale=1.0)
    X = _random_points(6)

    dilated = operator_service.maximal_many(fl.dilate_dyadic(f, m), X)
    expected = operator_service.maximal_many(f, X * 2.0 ** m)

    np.testing.assert_allclose(dilated, expected, rtol=1e-10)


@pytest.mark.parametrize("m", [-1, 1, 2])
def test_riesz_scales_under_dilation(operator_service, m):
    """I_lambda(f(2^m .))(x) = 2^{-m lambda} I_lambda f(2^m x)."""
    f = GaussianSpec(center=[0.5], scale=1.0)
    X = _random_points(7, count=10)

    dilated = operator_service.riesz_many(fl.dilate_dyadic(f, m), 0.5, X)
    expected = 2.0 ** (-0.5 * m) * operator_service.riesz_many(f, 0.5, X * 2.0 ** m)

    np.testing.assert_allclose(dilated, expected, rtol=1e-8)


def test_riesz_of_sharp_plateau(operator_service):
    """Equal radii make a disc indicator: I_1 chi_B(0) = 2 pi in the plane."""
    f = SmoothPlateau(center=[0.0, 0.0], inner_radius=1.0, outer_radius=1.0)

    assert operator_service.riesz(f, 1.0, [0.0, 0.0]) == pytest.approx(2.0 * math.pi, rel=1e-3)


# Herz norms of operator outputs

def test_maximal_herz_norm_keeps_far_annuli(operator_service, norm_service):
    """Mf decays like 1/|x|; annuli far beyond the support keep their mass."""
    f = GaussianSpec(center=[0.0], scale=1.0)
    hp = HerzParams(alpha=0.0, p=2.0, q=2.0, n=1)
    trunc = norm_service.default_truncation(k_lo=-8, k_hi=16, tail_tol=1e-3, hard_cap=40)

    result = norm_service.pointwise_herz_norm(
        lambda X: operator_service.maximal_many(f, X),
        hp,
        SupportAnnuli(decay=DecayHint(kind="power", exponent=-1.0)),
        trunc,
    )
    terms = {t.k: t.term for t in result.terms}

    assert result.divergence is None
    assert result.k_range_used[1] > 16
    # The cube [x - 2^{k+1}, x] holds almost all of the mass sqrt(pi)
    for k in range(6, 21):
        assert terms[k] >= 0.99 * math.sqrt(math.pi * 2.0 ** (-k - 2))


def test_riesz_herz_norm_pointwise_matches_profile(operator_service, norm_service):
    """Annulus-by-annulus point values agree with the radial profile path."""
    f = GaussianSpec(center=[0.0], scale=1.0)
    hp = HerzParams(alpha=0.125, p=4.0, q=2.0, n=1)
    support = SupportAnnuli(decay=DecayHint(kind="power", exponent=-0.75))
    trunc = norm_service.default_truncation(k_lo=-4, k_hi=4, tail_tol=1e-3, hard_cap=64)

    pointwise = norm_service.pointwise_herz_norm(
        lambda X: operator_service.riesz_many(f, 0.25, X), hp, support, trunc
    ).require_finite()
    profile = norm_service.profile_herz_norm(
        operator_service.riesz_profile(f, 0.25), hp, support, trunc
    ).require_finite()

    assert pointwise.value == pytest.approx(profile.value, rel=1e-3)
