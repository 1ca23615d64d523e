"""Unit tests for the test-function library."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from herzkit.exceptions import (
    DimensionMismatchError,
    MissingDerivativeError,
    UndefinedGradientError,
    UnsupportedVariantError,
)
from herzkit.models.functions import (
    FiniteSum,
    GaussianSpec,
    RadialPowerLog,
    SampledGrid,
    SmoothBump,
    SmoothPlateau,
)
from herzkit.services.function_library import (
    derivative_many,
    dilate_dyadic,
    evaluate,
    evaluate_many,
    gradient,
    has_derivatives,
    is_radial,
    radial_breakpoints,
    support_annuli,
    support_box,
    translate,
)


def _central_difference(f, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (evaluate(f, x + e) - evaluate(f, x - e)) / (2 * h)
    return out


def test_radial_power_evaluation():
    """|x|^-2 on the unit ball in the plane is 4 at |x| = 1/2."""
    f = RadialPowerLog(n=2, a=-2.0, r_hi=1.0)

    assert evaluate(f, [0.5, 0.0]) == pytest.approx(4.0)
    assert evaluate(f, [0.0, 1.5]) == 0.0


def test_radial_power_log_evaluation():
    """|x|^-1 |log|x||^-1 at |x| = 1/4 is 4 / log 4."""
    f = RadialPowerLog(n=1, a=-1.0, b=-1.0, r_hi=0.5)

    assert evaluate(f, [0.25]) == pytest.approx(4.0 / math.log(4.0))


def test_log_factor_zero_gives_zero():
    """Where log|x| + c vanishes the value is 0."""
    f = RadialPowerLog(n=1, a=0.0, b=-1.0, r_hi=2.0)

    assert evaluate(f, [1.0]) == 0.0


def test_bump_and_plateau_values():
    """Bump peaks at its center; plateau is flat inside its inner radius."""
    bump = SmoothBump(center=[1.0, 0.0], radius=0.5, amplitude=2.0)
    plateau = SmoothPlateau(center=[0.0, 0.0], inner_radius=1.0, outer_radius=2.0)

    assert evaluate(bump, [1.0, 0.0]) == pytest.approx(2.0)
    assert evaluate(bump, [0.0, 0.0]) == 0.0
    assert evaluate(plateau, [0.5, 0.5]) == 1.0
    assert 0.0 < evaluate(plateau, [1.5, 0.0]) < 1.0
    assert evaluate(plateau, [2.5, 0.0]) == 0.0


def test_dimension_mismatch():
    """A point of the wrong dimension is rejected."""
    f = GaussianSpec(center=[0.0, 0.0], scale=1.0)

    with pytest.raises(DimensionMismatchError) as exc_info:
        evaluate(f, [0.0, 0.0, 0.0])

    assert exc_info.value.code == "DIMENSION_MISMATCH"


@pytest.mark.parametrize("f,x", [
    (GaussianSpec(center=[0.2, -0.1], scale=0.7), [0.3, 0.4]),
    (SmoothBump(center=[0.0, 0.0], radius=1.0), [0.3, -0.2]),
    (SmoothPlateau(center=[0.0, 0.0], inner_radius=0.5, outer_radius=1.0), [0.6, 0.2]),
    (RadialPowerLog(n=2, a=-0.5, b=1.0, r_lo=0.1, r_hi=2.0), [0.7, 0.3]),
])
def test_gradient_matches_finite_differences(f, x):
    """Analytic gradients agree with central differences."""
    np.testing.assert_allclose(gradient(f, x), _central_difference(f, x), rtol=1e-6, atol=1e-8)


def test_gradient_undefined_at_origin():
    """RadialPowerLog has no gradient at the origin."""
    f = RadialPowerLog(n=2, a=0.5, r_hi=1.0)

    with pytest.raises(UndefinedGradientError) as exc_info:
        gradient(f, [0.0, 0.0])

    assert exc_info.value.code == "UNDEFINED_GRADIENT"


def test_gradient_undefined_for_sharp_plateau():
    """The sharp indicator has no gradient anywhere."""
    f = SmoothPlateau(center=[0.0], inner_radius=1.0, outer_radius=1.0)

    with pytest.raises(UndefinedGradientError):
        gradient(f, [0.3])


def test_gaussian_second_derivative():
    """Mixed and pure second derivatives of a Gaussian match differences of its gradient."""
    f = GaussianSpec(center=[0.0, 0.0], scale=1.0)
    x = np.array([[0.4, -0.3]])
    h = 1e-5

    d11 = derivative_many(f, (2, 0), x)[0]
    d12 = derivative_many(f, (1, 1), x)[0]
    fd11 = (gradient(f, x[0] + [h, 0])[0] - gradient(f, x[0] - [h, 0])[0]) / (2 * h)
    fd12 = (gradient(f, x[0] + [0, h])[0] - gradient(f, x[0] - [0, h])[0]) / (2 * h)

    assert d11 == pytest.approx(fd11, rel=1e-6)
    assert d12 == pytest.approx(fd12, rel=1e-6)


def test_bump_second_derivative():
    """Second derivatives of a bump match differences of its gradient."""
    f = SmoothBump(center=[0.1, 0.0], radius=1.0)
    x = np.array([[0.3, 0.2]])
    h = 1e-5

    d22 = derivative_many(f, (0, 2), x)[0]
    fd22 = (gradient(f, x[0] + [0, h])[1] - gradient(f, x[0] - [0, h])[1]) / (2 * h)

    assert d22 == pytest.approx(fd22, rel=1e-6)


def test_missing_derivative():
    """Order-two derivatives of a power profile are not registered."""
    f = RadialPowerLog(n=2, a=1.5, r_hi=1.0)

    assert not has_derivatives(f, 2)
    with pytest.raises(MissingDerivativeError):
        derivative_many(f, (1, 1), np.array([[0.3, 0.3]]))


def test_dilation_matches_rescaled_evaluation():
    """dilate_dyadic(f, m)(x) == f(2^m x), including the log offset."""
    f = RadialPowerLog(n=2, a=-0.5, b=1.0, r_lo=0.1, r_hi=2.0)
    x = np.array([0.3, 0.1])

    dilated = dilate_dyadic(f, 2)

    assert evaluate(dilated, x) == pytest.approx(evaluate(f, 4.0 * x), rel=1e-12)


@pytest.mark.parametrize("f", [
    SmoothBump(center=[0.5, -0.25], radius=0.75),
    GaussianSpec(center=[0.0, 1.0], scale=0.5, amplitude=3.0),
    FiniteSum(members=[
        GaussianSpec(center=[0.0, 0.0], scale=1.0),
        SmoothPlateau(center=[1.0, 0.0], inner_radius=0.5, outer_radius=1.0),
    ]),
])
def test_dilation_of_centered_variants(f):
    """Negative and positive dilations both rescale the argument."""
    X = np.array([[0.1, 0.2], [0.4, -0.3], [1.0, 0.5]])
    for m in (-1, 3):
        np.testing.assert_allclose(
            evaluate_many(dilate_dyadic(f, m), X), evaluate_many(f, X * 2.0 ** m), rtol=1e-12
        )


def test_dilation_of_sampled_grid_unsupported():
    """Sampled grids cannot be dilated."""
    f = SampledGrid(n=1, lo=[0.0], hi=[1.0], spacing=0.5, values=[0.0, 1.0, 0.0])

    with pytest.raises(UnsupportedVariantError):
        dilate_dyadic(f, 1)


def test_translate():
    """Translation moves the center."""
    f = GaussianSpec(center=[0.0], scale=1.0)

    moved = translate(f, [2.0])

    assert evaluate(moved, [2.0]) == pytest.approx(1.0)
    assert not is_radial(moved)


def test_support_annuli():
    """A unit bump lives in annuli up to C_0; a Gaussian is unbounded on both sides."""
    bump = support_annuli(SmoothBump(center=[0.0, 0.0], radius=1.0))
    shell = support_annuli(RadialPowerLog(n=2, a=0.0, r_lo=0.3, r_hi=3.0))
    gauss = support_annuli(GaussianSpec(center=[0.0], scale=1.0))

    assert bump.k_min is None and bump.k_max == 0
    assert shell.k_min == -1 and shell.k_max == 2
    assert gauss.k_min is None and gauss.k_max is None
    assert gauss.decay.kind == "gaussian"


def test_radial_breakpoints():
    """Support edges and the log zero are breakpoints."""
    f = RadialPowerLog(n=2, a=-0.5, b=1.0, r_lo=0.25, r_hi=2.0)

    assert radial_breakpoints(f) == [0.25, 1.0, 2.0]


def test_support_box_for_gaussian():
    """Gaussians are treated as supported within eight scales."""
    lo, hi = support_box(GaussianSpec(center=[1.0, 0.0], scale=0.5))

    np.testing.assert_allclose(lo, [-3.0, -4.0])
    np.testing.assert_allclose(hi, [5.0, 4.0])


def test_node_grid_interpolates():
    """Node grids interpolate linearly and vanish outside the box."""
    f = SampledGrid(n=1, lo=[0.0], hi=[1.0], spacing=0.5, values=[0.0, 1.0, 0.0])

    assert evaluate(f, [0.25]) == pytest.approx(0.5)
    assert evaluate(f, [1.5]) == 0.0


def test_cell_grid_is_piecewise_constant():
    """Cell grids return the value of the containing cell."""
    f = SampledGrid(n=1, lo=[0.0], hi=[1.0], spacing=0.25, values=[1.0, 2.0, 3.0, 4.0], layout="cell")

    assert evaluate(f, [0.1]) == 1.0
    assert evaluate(f, [0.9]) == 4.0


def test_grid_value_count_validated():
    """A value list of the wrong length is rejected."""
    with pytest.raises(ValidationError):
        SampledGrid(n=1, lo=[0.0], hi=[1.0], spacing=0.5, values=[0.0, 1.0])


def test_finite_sum_requires_one_dimension():
    """Members of a sum must share their dimension."""
    with pytest.raises(ValidationError):
        FiniteSum(members=[
            GaussianSpec(center=[0.0], scale=1.0),
            GaussianSpec(center=[0.0, 0.0], scale=1.0),
        ])


def test_finite_sum_adds_members():
    """A sum evaluates to the sum of its members."""
    a = GaussianSpec(center=[0.0], scale=1.0)
    b = SmoothBump(center=[0.5], radius=1.0)
    total = FiniteSum(members=[a, b])

    assert evaluate(total, [0.3]) == pytest.approx(evaluate(a, [0.3]) + evaluate(b, [0.3]))
