import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from raftjamsec.errors import DomainError, QuadratureError, UnsupportedExponentError
from raftjamsec.specfun import (QuadratureSpec, hyp2f1, hyp2f1_coverage, integrate, q_function,
                                q_inverse)

from oracles import hyp2f1_mp, hyp2f1_pfaff_series, midpoint_rule, q_inverse_bisection, q_math


# --- Q and its inverse -------------------------------------------------------


def test_q_at_zero_is_half():
    assert q_function(0.0) == 0.5


def test_q_far_tail():
    assert q_function(8.0) < 1e-15


def test_q_matches_bisection_oracle_at_ten_percent():
    x = q_inverse_bisection(0.1)
    assert abs(x - 1.2815515655) < 1e-9
    assert abs(q_function(1.2815515655) - 0.1) < 1e-9


def test_q_symmetry_and_monotonicity():
    x = np.linspace(-8, 8, 2001)
    q = q_function(x)
    # near x = -8 the value rounds to 1.0, so strictness only holds above that
    assert np.all(np.diff(q) <= 0)
    assert np.all(np.diff(q[x >= -5]) < 0)
    assert np.max(np.abs(q + q_function(-x) - 1.0)) < 1e-14


def test_q_agrees_with_math_erfc():
    for x in np.linspace(-6, 10, 81):
        assert q_function(x) == pytest.approx(q_math(x), rel=1e-14, abs=0)


@pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
def test_q_rejects_non_finite(bad):
    with pytest.raises(DomainError):
        q_function(bad)


def test_q_inverse_known_values():
    assert q_inverse(0.5) == pytest.approx(0.0, abs=1e-15)
    assert abs(q_inverse(0.05) - 1.6448536270) < 1e-8
    assert abs(q_inverse(0.05) - q_inverse_bisection(0.05)) < 1e-12


def _round_trip_error(x):
    return np.abs(q_inverse(q_function(x)) - x)


def resolution_limit(x):
    """Smallest round-trip error a binary64 value of Q(x) allows: one ulp of
    Q(x) divided by the slope phi(x), plus a few ulps of x itself."""
    phi = np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    return np.spacing(q_function(x)) / phi + 4 * np.spacing(np.abs(x) + 1)


def test_q_inverse_round_trip():
    assert abs(q_inverse(q_function(1.7)) - 1.7) < 1e-10
    x = np.linspace(-5.2, 6, 2241)
    assert np.max(_round_trip_error(x)) < 1e-10


def test_q_inverse_round_trip_at_float_resolution():
    # below x = -5.2, Q(x) lies within 1e-7 of one and its binary64 value no
    # longer pins x to 1e-10; the inverse must still be as exact as the input allows
    x = np.linspace(-6, 6, 12001)
    assert np.all(_round_trip_error(x) <= resolution_limit(x))


@pytest.mark.parametrize("p", [1e-300, 1e-12, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1 - 1e-12])
def test_q_of_q_inverse_relative(p):
    assert q_function(q_inverse(p)) == pytest.approx(p, rel=1e-12)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5])
def test_q_inverse_domain(bad):
    with pytest.raises(DomainError):
        q_inverse(bad)


# --- hypergeometric -----------------------------------------------------------


def test_hyp2f1_coverage_at_zero_is_one():
    for alpha in (2.1, 3.0, 4.0, 7.5):
        assert hyp2f1_coverage(alpha, 0.0) == 1.0


def test_hyp2f1_coverage_arctan_identity():
    assert hyp2f1_coverage(4.0, 1.0) == pytest.approx(math.pi / 4, rel=1e-12)
    # 2F1(1, 1/2; 3/2; -z^2) = arctan(z)/z
    for z in (0.3, 1.7, 12.0, 400.0):
        assert hyp2f1_coverage(4.0, z * z) == pytest.approx(math.atan(z) / z, rel=1e-12)


def test_hyp2f1_coverage_against_pfaff_series_oracle():
    assert abs(hyp2f1_coverage(3.0, 2.5) - hyp2f1_pfaff_series(1.0, 1 / 3, 4 / 3, 2.5)) < 1e-9


@pytest.mark.parametrize("alpha", [2.05, 2.5, 3.0, 3.5, 4.0, 6.0, 10.0])
def test_hyp2f1_coverage_against_mpmath(alpha):
    b, c = 1 - 2 / alpha, 2 - 2 / alpha
    for y in [1e-6, 0.1, 0.49, 0.5, 1.0, 1.99, 2.0, 5.0, 37.0, 1e3, 1e6, 1e12]:
        ref = hyp2f1_mp(1, b, c, -y)
        assert hyp2f1_coverage(alpha, y) == pytest.approx(ref, rel=1e-12), y


def test_hyp2f1_coverage_range_and_monotonicity():
    y = np.concatenate(([0.0], np.geomspace(1e-8, 1e15, 400)))
    for alpha in (2.5, 3.0, 4.0):
        v = hyp2f1_coverage(alpha, y)
        assert np.all(v > 0) and np.all(v <= 1)
        assert np.all(np.diff(v) < 0)


def test_hyp2f1_coverage_vectorized_matches_scalar():
    y = np.array([0.0, 0.2, 0.7, 3.0, 1e5])
    vec = hyp2f1_coverage(3.0, y)
    assert vec.shape == y.shape
    assert np.array_equal(vec, [hyp2f1_coverage(3.0, float(v)) for v in y])


def test_hyp2f1_log_identity():
    # 2F1(1, 1; 2; -y) = ln(1 + y) / y, same series/Pfaff code path
    for y in (0.1, 1.0, 10.0, 100.0):
        assert hyp2f1(1.0, 1.0, 2.0, -y) == pytest.approx(math.log1p(y) / y, rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(y=st.floats(min_value=0.0, max_value=100.0), alpha=st.sampled_from([2.5, 3.0, 3.5, 4.0]))
def test_hyp2f1_euler_transformation_consistency(y, alpha):
    # 2F1(a,b;c;z) = (1 - z)^-a 2F1(a, c - b; c; z/(z - 1)) with z = -y
    a, b, c = 1.0, 1 - 2 / alpha, 2 - 2 / alpha
    z = -y
    w = z / (z - 1.0)
    rhs = (1 - z) ** (-a) * float(hyp2f1_mp(a, c - b, c, w))
    assert hyp2f1_coverage(alpha, y) == pytest.approx(rhs, rel=1e-9)


@pytest.mark.parametrize("alpha", [2.0, 1.5, -3.0])
def test_hyp2f1_coverage_rejects_small_alpha(alpha):
    with pytest.raises(UnsupportedExponentError):
        hyp2f1_coverage(alpha, 1.0)


def test_hyp2f1_coverage_rejects_negative_argument():
    with pytest.raises(DomainError):
        hyp2f1_coverage(3.0, -0.1)


def test_hyp2f1_rejects_positive_argument():
    with pytest.raises(DomainError):
        hyp2f1(1.0, 1.0, 2.0, 0.5)


# --- quadrature -----------------------------------------------------------------


def test_gaussian_integral_over_real_line():
    res = integrate(lambda x: np.exp(-x * x), -math.inf, math.inf)
    assert abs(res.value - math.sqrt(math.pi)) < 1e-9


def test_distance_density_normalizes():
    rho = 15 / (math.pi * 500**2)
    res = integrate(lambda x: 2 * math.pi * rho * x * np.exp(-rho * math.pi * x * x), 0, math.inf)
    assert abs(res.value - 1.0) < 1e-9


def test_against_midpoint_oracle():
    f = lambda u: 1.0 / (1.0 + u**1.5)  # noqa: E731
    assert abs(integrate(f, 0.0, 4.0).value - midpoint_rule(f, 0.0, 4.0, 1000)) < 1e-6


def test_reported_error_meets_tolerance():
    spec = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-10)
    res = integrate(lambda x: np.sin(x) ** 2, 0.0, 10.0, spec)
    exact = 5.0 - math.sin(20.0) / 4.0
    assert res.error <= max(spec.abs_tol, spec.rel_tol * abs(res.value))
    assert abs(res.value - exact) < 1e-10


def test_negative_infinite_lower_limit():
    res = integrate(lambda x: np.exp(x), -math.inf, 0.0)
    assert abs(res.value - 1.0) < 1e-9


def test_endpoint_singularity():
    res = integrate(lambda x: 1.0 / np.sqrt(x), 0.0, 1.0, QuadratureSpec(max_subdivisions=4000))
    assert abs(res.value - 2.0) < 1e-7


def test_non_convergence_carries_estimate():
    spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=3)
    with pytest.raises(QuadratureError) as info:
        integrate(lambda x: np.sin(50 * x), 0.0, 10.0, spec)
    assert math.isfinite(info.value.estimate)
    assert info.value.error > 0


def test_quadrature_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(abs_tol=0.0)
    with pytest.raises(DomainError):
        QuadratureSpec(max_subdivisions=0)
    with pytest.raises(DomainError):
        integrate(lambda x: x, 1.0, 1.0)
