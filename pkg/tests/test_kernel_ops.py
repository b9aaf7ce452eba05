import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hankel_lab.errors import InvalidArgumentError, PreconditionError
from hankel_lab.kernel_ops import (
    KernelGrid,
    _shell,
    apply_tm,
    decompose_hse,
    elemconv_check,
    hardy_theory,
    kernel_derivative,
    kernel_kab,
    kernest_check,
    power_family,
    transplant_check,
    w_function,
)
from hankel_lab.multiplier_bank import Multiplier, chirp, make_lp_partition, one
from hankel_lab.transforms import FAST_SPEC, hankel_eval


def box():
    return Multiplier(lambda r: np.ones(r.shape, dtype=complex), (0.5, 2.0),
                      breakpoints=(0.5, 2.0), smooth=False, label="box")


def k33_box(r, s):
    """K_{3,3}[1_{[1/2,2]}] = (2/pi)/(rs) int_{1/2}^2 sin(r rho) sin(s rho) drho."""

    def prim(rho):
        # int sin(r x) sin(s x) dx = sin((r-s)x)/(2(r-s)) - sin((r+s)x)/(2(r+s))
        d = r - s
        first = np.where(np.abs(d) < 1e-12, rho / 2, np.sin(d * rho) / (2 * np.where(d == 0, 1, d)))
        return first - np.sin((r + s) * rho) / (2 * (r + s))

    return (2 / math.pi) * (prim(2.0) - prim(0.5)) / (r * s)


# ---------------------------------------------------------------------------
# kernels

def test_k33_matches_closed_form():
    r = np.linspace(0.3, 30.0, 23)
    K = kernel_kab(box(), 3.0, 3.0, r, r)
    R, S = np.meshgrid(r, r, indexing="ij")
    np.testing.assert_allclose(K.values, k33_box(R, S), atol=1e-10)
    assert K.symmetry_error() < 1e-14
    assert K.meta["quad_error"] <= 1e-9


def test_kernel_preconditions():
    with pytest.raises(PreconditionError):
        kernel_kab(one(), 2.0, 2.0, [1.0], [1.0])
    with pytest.raises(InvalidArgumentError):
        kernel_kab(box(), 0.5, 2.0, [1.0], [1.0])
    with pytest.raises(InvalidArgumentError):
        KernelGrid([0.0, 1.0], [0.0], np.zeros((1, 1)), (2, 2))
    K = KernelGrid([0.0, 1.0], [0.0], np.zeros((2, 1)), (2, 2))
    with pytest.raises(InvalidArgumentError):
        K.symmetry_error()


def test_kernel_grid_roundtrip(tmp_path):
    r = np.linspace(0.0, 5.0, 6)
    K = kernel_kab(chirp(8), 2.0, 3.0, r, r[:4])
    K.save(tmp_path / "k.bin")
    back = KernelGrid.load(tmp_path / "k.bin")
    np.testing.assert_array_equal(back.values, K.values)
    assert back.orders == (2.0, 3.0) and back.label == "chirp:8"
    K.to_csv(tmp_path / "k.csv")
    data = np.loadtxt(tmp_path / "k.csv", delimiter=",", skiprows=1)
    np.testing.assert_array_equal(data[:, 2] + 1j * data[:, 3], K.values.ravel())
    (tmp_path / "bad.bin").write_bytes(b"12345678")
    with pytest.raises(InvalidArgumentError):
        KernelGrid.load(tmp_path / "bad.bin")


@pytest.mark.parametrize("beta,gamma", [(1, 0), (0, 1), (1, 1)])
def test_kernel_derivative_against_closed_form(beta, gamma):
    r = np.array([0.7, 3.0, 11.0])
    s = np.array([0.9, 5.0])
    got = kernel_derivative(box(), 3.0, 3.0, r, s, beta, gamma)
    h = 1e-5
    R, S = np.meshgrid(r, s, indexing="ij")
    f = k33_box
    if beta and gamma:
        ref = (f(R + h, S + h) - f(R + h, S - h) - f(R - h, S + h) + f(R - h, S - h)) / (4 * h * h)
    elif beta:
        ref = (f(R + h, S) - f(R - h, S)) / (2 * h)
    else:
        ref = (f(R, S + h) - f(R, S - h)) / (2 * h)
    np.testing.assert_allclose(got.real, ref, atol=2e-6)
    with pytest.raises(InvalidArgumentError):
        kernel_derivative(box(), 3.0, 3.0, r, s, 2, 0)


def test_w_function_is_even():
    # m real makes |F^{-1}[m]| even
    x, W = w_function(make_lp_partition().phi, 4, 32.0)
    np.testing.assert_allclose(W, W[::-1], rtol=1e-10)
    assert np.all(W > 0)


def test_kernest_constant_is_finite_and_positive():
    r = np.linspace(0.0, 10.0, 21)
    out = kernest_check(chirp(8), 2.0, 2.0, N=4, r_nodes=r)
    assert 0 < out["empirical_C"] < 100
    assert out["ratio"].shape == (21, 21)
    with pytest.raises(PreconditionError):
        kernest_check(chirp(8), 2.0, 2.0, N=1)


def test_elemconv_at_zero_shift_is_equality():
    g = lambda u: np.exp(-u * u)  # noqa: E731
    lhs, rhs = elemconv_check(g, 0.0)
    assert lhs == pytest.approx(rhs, rel=1e-14)
    lhs, rhs = elemconv_check(g, 20.0)
    assert lhs <= 2.0 ** 4 * rhs


# ---------------------------------------------------------------------------
# operators and decompositions

def test_identity_multiplier_reproduces_input():
    r = np.linspace(0.0, 4.0, 17)

    def f(s):
        return np.exp(-0.5 * s * s)

    out = apply_tm(one(), 3.0, f, r, support=(0.0, 12.0), rho_max=12.0)
    np.testing.assert_allclose(out.values.real, f(r), atol=1e-7)
    with pytest.raises(InvalidArgumentError):
        apply_tm(one(), 3.0, f, r)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(-40, 40), frac=st.floats(0.0, 0.999999))
def test_shells_are_half_open(n, frac):
    x = 2.0 ** n * (1.0 + frac)
    assert _shell(np.array([x]))[0] == n
    assert _shell(np.array([2.0 ** n]))[0] == n


def test_decomposition_pieces_sum_to_direct():
    r = np.geomspace(1 / 8, 32.0, 40)

    def f(s):
        return np.exp(-8.0 / ((s - 0.25) * (8.0 - s)))

    pieces = decompose_hse(chirp(8), 0, f, 2.0, r, (0.25, 8.0), width=1)
    assert pieces.partition_error() < 1e-13
    w = pieces.index_ranges["width"]
    for n, i in pieces.S:
        assert abs(i) <= w
    assert pieces.H and pieces.E
    with pytest.raises(InvalidArgumentError):
        decompose_hse(chirp(8), 0, f, 2.0, np.array([0.0, 1.0]), (0.25, 8.0))
    with pytest.raises(InvalidArgumentError):
        decompose_hse(chirp(8), 0, f, 2.0, r, (0.0, 8.0))


def test_hardy_theory_and_power_family():
    assert hardy_theory(2.0, 1.5) == pytest.approx((2 / 3, 2 * (1 / 1.5 - 0.5) - 0.5))
    d, p = 3.0, 1.4
    f = power_family(d, p)
    # mu_d(f > lam) = (c / lam)^{p} / d, so lam * mu(f > lam)^{1/p} = 1 for every lam
    for lam in (0.1, 1.0, 10.0):
        radius = (d ** (1 / p) / lam) ** (p / d)
        assert f(radius) == pytest.approx(lam)
        assert lam * (radius ** d / d) ** (1 / p) == pytest.approx(1.0)


def spectral_bump(d):
    """g = B_d[G] for a Gaussian G centred at 1.25 (width 0.1) cut to [1/2, 2]."""

    def G(rho):
        return np.exp(-0.5 * ((rho - 1.25) / 0.1) ** 2)

    def g(s):
        return hankel_eval(d, G, s, FAST_SPEC, support=(0.5, 2.0)).real

    return g


def test_transplant_is_identity_for_d1():
    # B_1 is self-inverse and eta = 1 on the spectrum, so LHS = ||g||_q
    out = transplant_check(spectral_bump(1.0), 1.0, 1.5, g_support=(0.0, 64.0), r_max=64.0)
    assert out["leakage"] < 1e-6
    # trapezoid on |.|^q, which has kinks at the zeros
    assert out["ratio"] == pytest.approx(1.0, rel=1e-5)


def test_transplant_sides_are_comparable():
    # eta is only C^4, so the pointwise constant grows with M; M = 2 keeps it small
    out = transplant_check(spectral_bump(3.0), 3.0, 1.5, g_support=(0.0, 64.0), r_max=64.0, M=2)
    assert 0.5 < out["ratio"] < 2.0
    assert out["pointwise_ratio"].shape == (3,)
    assert out["max_pointwise_ratio"] < 10
    with pytest.raises(InvalidArgumentError):
        transplant_check(spectral_bump(3.0), 3.0, 1.5)
    # a compactly supported g has spectrum everywhere
    with pytest.raises(PreconditionError):
        transplant_check(lambda s: np.where(s < 1, (1 - s * s) ** 5, 0.0), 3.0, 1.5,
                         g_support=(0.0, 1.0))
