"""Unit tests for NormService and the sequence helpers."""

import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from herzkit.exceptions import (
    DimensionMismatchError,
    InvalidParameterError,
    MissingDerivativeError,
    NonIntegrableSingularityError,
    NormDivergenceError,
)
from herzkit.models.functions import (
    DecayHint,
    FiniteSum,
    GaussianSpec,
    RadialPowerLog,
    SmoothBump,
    SupportAnnuli,
)
from herzkit.models.params import HerzParams, SobolevParams
from herzkit.models.requests import NormRequest
from herzkit.models.results import AnnulusMass, TruncationPolicy
from herzkit.services.function_library import dilate_dyadic
from herzkit.services.norm_service import (
    dyadic_weight,
    hardy_bound_check,
    hardy_transform,
    lq_norm,
    multi_indices,
)


@pytest.fixture
def gaussian():
    return GaussianSpec(center=[0.0, 0.0], scale=1.0)


# Sequence helpers

def test_lq_norm():
    """Finite, infinite and quasi-norm exponents."""
    assert lq_norm([3.0, 4.0], 2.0) == pytest.approx(5.0)
    assert lq_norm([3.0, 4.0], math.inf) == 4.0
    assert lq_norm([1.0, 1.0], 0.5) == pytest.approx(4.0)
    assert lq_norm([], 2.0) == 0.0


def test_dyadic_weight():
    """Zero masses stay zero; overflow becomes inf."""
    assert dyadic_weight(3, 1.0, 2.0) == 16.0
    assert dyadic_weight(5000, 1.0, 0.0) == 0.0
    assert dyadic_weight(5000, 1.0, 1.0) == math.inf


def test_multi_indices():
    """All multi-indices of a given order."""
    assert multi_indices(2, 1) == [(0, 1), (1, 0)]
    assert len(multi_indices(3, 2)) == 6


def test_hardy_transform():
    """delta_k accumulates later entries with powers of a."""
    assert list(hardy_transform([1.0, 0.0, 0.0], 0.5)) == [1.0, 0.0, 0.0]
    assert list(hardy_transform([0.0, 0.0, 1.0], 0.5)) == [0.25, 0.5, 1.0]


def test_hardy_transform_rejects_bad_input():
    """a must lie in (0, 1) and entries must be non-negative."""
    with pytest.raises(InvalidParameterError):
        hardy_transform([1.0], 1.0)
    with pytest.raises(InvalidParameterError):
        hardy_transform([-1.0], 0.5)


@hyp_settings(max_examples=200)
@given(
    eps=st.lists(st.one_of(st.just(0.0), st.floats(min_value=1e-6, max_value=100.0)), min_size=1, max_size=40),
    a=st.floats(min_value=0.01, max_value=0.99),
    q=st.one_of(st.floats(min_value=0.25, max_value=6.0), st.just(math.inf)),
)
def test_hardy_bound_holds(eps, a, q):
    """||delta||_q <= c(a, q) ||eps||_q for every non-negative sequence."""
    lhs, rhs, _ = hardy_bound_check(eps, a, q)

    assert lhs <= rhs * (1.0 + 1e-12)


# Norms

def test_herz_with_zero_weight_is_lebesgue(norm_service, gaussian):
    """alpha = 0 and p = q reproduce the L^p norm."""
    expected = math.sqrt(math.pi / 2.0)

    herz = norm_service.herz_norm(gaussian, HerzParams(alpha=0.0, p=2.0, q=2.0, n=2))
    lebesgue = norm_service.lebesgue_norm(gaussian, 2.0)

    assert herz.value == pytest.approx(expected, rel=1e-8)
    assert lebesgue.value == pytest.approx(expected, rel=1e-8)
    assert herz.converged
    assert herz.divergence is None


def test_terms_are_ordered(norm_service):
    """Terms come back sorted by k and the window covers them."""
    f = SmoothBump(center=[0.0, 0.0], radius=1.0)

    result = norm_service.herz_norm(f, HerzParams(alpha=0.5, p=2.0, q=1.0, n=2))
    ks = [t.k for t in result.terms]

    assert ks == sorted(ks)
    assert result.k_range_used == (ks[0], ks[-1])
    assert ks[-1] == 0
    assert result.value == pytest.approx(math.fsum(t.term for t in result.terms))


@pytest.mark.parametrize("m", [-2, 3])
def test_dilation_homogeneity(norm_service, m):
    """||f(2^m .)|| = 2^{-m(alpha + n/p)} ||f||."""
    f = SmoothBump(center=[0.0, 0.0], radius=1.0)
    hp = HerzParams(alpha=0.5, p=2.0, q=1.0, n=2)

    base = norm_service.herz_norm(f, hp).value
    dilated = norm_service.herz_norm(dilate_dyadic(f, m), hp).value

    assert dilated == pytest.approx(2.0 ** (-m * hp.homogeneity()) * base, rel=1e-8)


def test_divergence_detected(norm_service):
    """Terms growing towards the origin are reported as a low-side divergence."""
    f = GaussianSpec(center=[0.0], scale=1.0)

    result = norm_service.herz_norm(f, HerzParams(alpha=-2.0, p=1.0, q=1.0, n=1))

    assert result.divergence == "low"
    assert not result.converged
    with pytest.raises(NormDivergenceError) as exc_info:
        result.require_finite()
    assert exc_info.value.direction == "low"


def test_dimension_mismatch(norm_service, gaussian):
    """HerzParams.n must match the function."""
    with pytest.raises(DimensionMismatchError):
        norm_service.herz_norm(gaussian, HerzParams(alpha=0.0, p=2.0, q=2.0, n=3))


def test_weighted_lp_closed_form(norm_service):
    """(integral over the unit disc of |x|^2)^{1/2} = sqrt(pi/2)."""
    f = RadialPowerLog(n=2, a=0.0, r_hi=1.0)

    value = norm_service.weighted_lp_norm(f, 1.0, 2.0)

    assert value == pytest.approx(math.sqrt(math.pi / 2.0), rel=1e-8)


def test_weighted_lp_origin_test(norm_service):
    """|x|^-2 in the plane is not integrable at the origin."""
    f = RadialPowerLog(n=2, a=-2.0, r_hi=1.0)

    with pytest.raises(NonIntegrableSingularityError):
        norm_service.weighted_lp_norm(f, 0.0, 1.0)


def test_sobolev_order_zero_is_herz(norm_service, gaussian):
    """m = 0 reduces the Herz-Sobolev norm to the Herz norm."""
    hp = HerzParams(alpha=0.5, p=2.0, q=2.0, n=2)

    sobolev = norm_service.herz_sobolev_norm(gaussian, SobolevParams(herz=hp, m=0))
    herz = norm_service.herz_norm(gaussian, hp)

    assert sobolev.value == pytest.approx(herz.value, rel=1e-12)


def test_sobolev_top_order_matches_gradient(norm_service, gaussian):
    """For p = 2 the first-order seminorm equals the Herz norm of |grad f|."""
    hp = HerzParams(alpha=0.5, p=2.0, q=2.0, n=2)

    seminorm = norm_service.herz_sobolev_norm(gaussian, SobolevParams(herz=hp, m=1), top_order=True)
    gradient = norm_service.gradient_herz_norm(gaussian, 0.5, 2.0, 2.0)

    assert seminorm.value == pytest.approx(gradient.value, rel=1e-8)


def test_sobolev_full_norm_exceeds_seminorm(norm_service, gaussian):
    """Adding lower orders can only increase the norm."""
    sp = SobolevParams(herz=HerzParams(alpha=0.0, p=2.0, q=2.0, n=2), m=2)

    full = norm_service.herz_sobolev_norm(gaussian, sp).value
    top = norm_service.herz_sobolev_norm(gaussian, sp, top_order=True).value

    assert full > top > 0.0


def test_sobolev_missing_derivative(norm_service):
    """Second derivatives of power profiles are unavailable."""
    f = RadialPowerLog(n=2, a=1.0, r_hi=1.0)
    sp = SobolevParams(herz=HerzParams(alpha=0.0, p=2.0, q=2.0, n=2), m=2)

    with pytest.raises(MissingDerivativeError):
        norm_service.herz_sobolev_norm(f, sp)


def test_evaluate_dispatches_on_kind(norm_service):
    """A norm payload reaches the matching norm."""
    req = NormRequest.model_validate({
        "function": {"variant": "Gaussian", "center": [0.0, 0.0], "scale": 1.0},
        "kind": "lebesgue",
        "p": 2,
    })

    result = norm_service.evaluate(req)

    assert result.value == pytest.approx(math.sqrt(math.pi / 2.0), rel=1e-8)


def _sandwich_specs(count=30, seed=11):
    rng = np.random.default_rng(seed)
    specs = []
    for i in range(count):
        alpha = float(rng.uniform(-0.2, 1.2))
        p = float(rng.choice([1.0, 2.0]))
        n = int(rng.integers(1, 4))
        if i % 3 == 0:
            f = GaussianSpec(center=[0.0] * n, scale=float(2.0 ** rng.uniform(-2.0, 2.0)))
        elif i % 3 == 1:
            f = RadialPowerLog(
                n=n,
                a=float(rng.uniform(-n - 2.0, 3.0)),
                b=float(rng.choice([0.0, 1.0])),
                r_lo=2.0 ** int(rng.integers(-4, 0)),
                r_hi=2.0 ** int(rng.integers(1, 4)),
            )
        else:
            f = GaussianSpec(center=[float(rng.uniform(-1.0, 1.0))], scale=float(2.0 ** rng.uniform(-1.0, 1.0)))
        specs.append((f, alpha, p))
    return specs


@pytest.mark.parametrize("f,alpha,p", _sandwich_specs())
def test_weighted_norm_sandwich(norm_service, f, alpha, p):
    """With p = q, |x|^alpha and 2^{k alpha} differ by at most 2^{|alpha|} on each annulus."""
    hp = HerzParams(alpha=alpha, p=p, q=p, n=f.dim)

    herz = norm_service.herz_norm(f, hp).value
    weighted = norm_service.weighted_lp_norm(f, alpha, p)
    ratio = weighted / herz

    assert 2.0 ** -abs(alpha) * (1.0 - 1e-6) <= ratio <= 2.0 ** abs(alpha) * (1.0 + 1e-6)


def test_herz_norm_decreases_in_q(norm_service, gaussian):
    """The outer l^q norm is non-increasing in q."""
    values = [
        norm_service.herz_norm(gaussian, HerzParams(alpha=0.5, p=2.0, q=q, n=2)).value
        for q in (0.5, 1.0, 2.0, 4.0, math.inf)
    ]

    assert all(b <= a * (1.0 + 1e-12) for a, b in zip(values, values[1:]))
    assert values[-1] < values[0]


@pytest.mark.parametrize("seed", range(5))
def test_triangle_inequality_on_sums(norm_service, seed):
    """||f + g|| <= ||f|| + ||g|| for p, q >= 1."""
    rng = np.random.default_rng(seed)
    f, g = (
        GaussianSpec(
            center=[float(rng.uniform(-2.0, 2.0))],
            scale=float(2.0 ** rng.uniform(-1.0, 1.0)),
            amplitude=float(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0)),
        )
        for _ in range(2)
    )
    hp = HerzParams(alpha=float(rng.uniform(-0.4, 0.5)), p=2.0, q=1.5, n=1)

    total = norm_service.herz_norm(FiniteSum(members=[f, g]), hp).value
    separate = norm_service.herz_norm(f, hp).value + norm_service.herz_norm(g, hp).value

    assert total <= separate * (1.0 + 1e-3)


def test_tail_test_uses_current_running_value(norm_service):
    """Once the low side has widened, the high edge is judged against the grown norm."""
    def term(k):
        if 0 <= k <= 15:
            value = (1.0 if k < 8 else 0.5) if k % 2 == 0 else 0.0
        elif -8 <= k < 0:
            value = 10.0 if k % 2 == 0 else 0.0
        else:
            value = 0.0
        return AnnulusMass(k=k, value=value)

    trunc = TruncationPolicy(k_lo=0, k_hi=15, tail_tol=0.2, hard_cap=64)
    open_support = SupportAnnuli(decay=DecayHint(kind="power", exponent=-1.0))

    result = norm_service.aggregate(term, 0.0, 1.0, open_support, trunc)

    assert result.k_range_used == (-16, 15)
    assert result.value == pytest.approx(46.0)
    assert result.divergence is None
