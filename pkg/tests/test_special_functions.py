import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from hankel_lab.errors import (
    InvalidArgumentError,
    OutOfDomainError,
    UnsupportedDerivativeError,
    UnsupportedOrderError,
)
from hankel_lab.special_functions import (
    AsymptoticExpansion,
    BesselEval,
    b_asymptotic,
    b_kernel,
    b_kernel_deriv,
    bessel_j,
    crossover,
)


# ---------------------------------------------------------------------------
# bessel_j

def test_j0_at_origin():
    assert bessel_j(0.0, 0.0) == 1.0


def test_j_half_closed_form_zero_at_pi():
    # J_{1/2}(x) = sqrt(2/(pi x)) sin x
    assert abs(bessel_j(0.5, math.pi)) < 1e-12
    x = np.linspace(0.1, 60.0, 300)
    np.testing.assert_allclose(bessel_j(0.5, x), np.sqrt(2 / (np.pi * x)) * np.sin(x),
                               atol=1e-12)


def test_first_zero_of_j0_by_bisection_on_series():
    lo, hi = 2.0, 3.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if bessel_j(0.0, lo, method="series") * bessel_j(0.0, mid, method="series") <= 0:
            hi = mid
        else:
            lo = mid
    assert abs(0.5 * (lo + hi) - 2.404825557695773) < 1e-12
    assert abs(bessel_j(0.0, 2.404825557695773)) < 1e-12


@pytest.mark.parametrize("nu", [-0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 3.7, 12.0])
def test_hybrid_matches_reference(nu):
    x = np.concatenate([np.linspace(0.01, 40.0, 400), np.geomspace(40.0, 1e4, 100)])
    ref = special.jv(nu, x)
    err = np.abs(bessel_j(nu, x) - ref) / np.maximum(1.0, np.abs(ref))
    assert err.max() < 1e-9


@pytest.mark.parametrize("d", [2.0, 2.5, 3.0, 4.0])
def test_series_and_asymptotic_agree_on_overlap(d):
    nu = 0.5 * (d - 2.0)
    x = np.linspace(10.0, 30.0, 81)
    series = bessel_j(nu, x, method="series")
    asym = bessel_j(nu, x, method="asymptotic")
    assert np.max(np.abs(series - asym)) < 1e-8


def test_crossover_point():
    assert crossover(0.0) == 15.0
    assert crossover(20.0) == 40.0


def test_bessel_errors():
    with pytest.raises(UnsupportedOrderError):
        bessel_j(-0.75, 1.0)
    with pytest.raises(InvalidArgumentError):
        bessel_j(0.0, float("nan"))
    with pytest.raises(InvalidArgumentError):
        bessel_j(0.0, np.inf)
    with pytest.raises(InvalidArgumentError):
        BesselEval(0.0, method="nope")
    assert BesselEval(1.0)(2.0) == pytest.approx(special.jv(1.0, 2.0), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(nu=st.sampled_from([0.5, 1.0, 1.5, 2.0]), x=st.floats(0.1, 100.0))
def test_three_term_recurrence(nu, x):
    lhs = bessel_j(nu - 1, x) + bessel_j(nu + 1, x) - (2 * nu / x) * bessel_j(nu, x)
    assert abs(lhs) <= 1e-9 * max(1.0, abs(bessel_j(nu, x)))


# ---------------------------------------------------------------------------
# b_kernel

def test_b2_is_j0():
    x = np.linspace(0.0, 50.0, 201)
    np.testing.assert_allclose(b_kernel(2.0, x), special.j0(x), atol=1e-12)
    assert b_kernel(2.0, 0.0) == 1.0


def test_b3_closed_form():
    x = np.linspace(0.05, 80.0, 400)
    np.testing.assert_allclose(b_kernel(3.0, x), np.sqrt(2 / np.pi) * np.sin(x) / x, atol=1e-12)


def test_b4_origin_limit():
    assert b_kernel(4.0, 0.0) == pytest.approx(0.5, abs=1e-15)
    assert b_kernel(4.0, 1e-6) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("d", [1.0, 1.5, 2.5, 5.0])
def test_b_origin_limit_general(d):
    assert b_kernel(d, 0.0) == pytest.approx(2 ** (-(d - 2) / 2) / math.gamma(d / 2), rel=1e-14)


def test_b_kernel_rejects_small_d():
    with pytest.raises(UnsupportedOrderError):
        b_kernel(0.5, 1.0)


@pytest.mark.parametrize("d", [2.0, 2.5, 3.0, 4.0])
def test_b_branches_agree(d):
    x = np.linspace(10.0, 30.0, 81)
    assert np.max(np.abs(b_kernel(d, x, method="series")
                         - b_kernel(d, x, method="asymptotic"))) < 1e-8


@pytest.mark.parametrize("d", [2.0, 2.5, 3.0, 4.0])
def test_envelope_validity(d):
    x = np.linspace(10.0, 500.0, 2000)
    _, rem = b_asymptotic(d, 0, 4, x)
    env = 1.1 * math.sqrt(2 / math.pi) * x ** (-(d - 1) / 2) + rem
    assert np.all(np.abs(b_kernel(d, x)) <= env)


# ---------------------------------------------------------------------------
# derivatives

def test_b3_first_derivative():
    x = np.linspace(0.5, 50.0, 200)
    expect = np.sqrt(2 / np.pi) * (np.cos(x) / x - np.sin(x) / x ** 2)
    np.testing.assert_allclose(b_kernel_deriv(3.0, 1, x), expect, atol=1e-12)


def test_zeroth_derivative_is_kernel():
    x = np.linspace(0.5, 50.0, 50)
    np.testing.assert_array_equal(b_kernel_deriv(2.5, 0, x), b_kernel(2.5, x))


def test_b2_derivative_is_minus_j1():
    x = np.linspace(0.5, 50.0, 200)
    np.testing.assert_allclose(b_kernel_deriv(2.0, 1, x), -special.j1(x), atol=1e-12)


@pytest.mark.parametrize("d", [2.0, 2.5, 3.0, 4.0, 5.5])
def test_derivative_matches_centered_differences(d):
    x = np.linspace(0.5, 50.0, 300)
    h = 1e-5
    fd = (b_kernel(d, x + h) - b_kernel(d, x - h)) / (2 * h)
    exact = b_kernel_deriv(d, 1, x)
    assert np.max(np.abs(fd - exact) / np.maximum(1e-2, np.abs(exact))) < 1e-6


@pytest.mark.parametrize("k", [2, 3, 4])
def test_higher_derivatives_by_differencing_lower(k):
    x = np.linspace(1.0, 40.0, 120)
    h = 1e-5
    fd = (b_kernel_deriv(3.0, k - 1, x + h) - b_kernel_deriv(3.0, k - 1, x - h)) / (2 * h)
    assert np.max(np.abs(fd - b_kernel_deriv(3.0, k, x))) < 1e-7


def test_derivative_cap():
    with pytest.raises(UnsupportedDerivativeError):
        b_kernel_deriv(2.0, 5, 1.0)


# ---------------------------------------------------------------------------
# asymptotic expansion

@pytest.mark.parametrize("d", [1.5, 2.0, 3.0, 4.5])
def test_leading_coefficients(d):
    cp, cm = AsymptoticExpansion(d, 0, 2).leading()
    expect = (2 * math.pi) ** -0.5 * np.exp(-1j * (d - 1) * math.pi / 4)
    assert abs(cp - expect) < 1e-15
    assert abs(cm - np.conj(expect)) < 1e-15


def test_d3_expansion_is_exact():
    exp = AsymptoticExpansion(3.0, 0, 1)
    assert np.all(np.abs(exp.c_plus[1:]) < 1e-15)
    x = np.linspace(1.0, 100.0, 200)
    np.testing.assert_allclose(exp.value(x), np.sqrt(2 / np.pi) * np.sin(x) / x, atol=1e-14)


def test_remainder_bounds_error_at_50():
    val, rem = b_asymptotic(2.0, 0, 3, 50.0)
    assert abs(b_kernel(2.0, 50.0) - val) <= rem


@pytest.mark.parametrize("k", [0, 1, 2])
def test_remainder_covers_error_and_decreases(k):
    x = np.linspace(10.0, 300.0, 600)
    val, rem = b_asymptotic(2.5, k, 4, x)
    assert np.all(np.abs(b_kernel_deriv(2.5, k, x) - val) <= rem)
    env = AsymptoticExpansion(2.5, k, 4).remainder_envelope(np.linspace(1, 100, 50))
    assert np.all(np.diff(env) < 0)


def test_expansion_domain():
    with pytest.raises(OutOfDomainError):
        b_asymptotic(2.0, 0, 3, 0.5)
    with pytest.raises(InvalidArgumentError):
        AsymptoticExpansion(2.0, 0, 0)
