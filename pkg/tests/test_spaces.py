import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from hankel_lab.errors import (
    EmptyInputError,
    InvalidArgumentError,
    OutOfDomainError,
    PreconditionError,
    UnsupportedInputError,
)
from hankel_lab.spaces import (
    LorentzIndex,
    NotRearrangeableError,
    WeightedMeasure,
    besov_b2aq,
    decreasing_rearrangement,
    dyadic_quasinorm,
    lebesgue_norm,
    lorentz_norm,
    norm_report,
    rearrange_cells,
    weighted_conv_bound_check,
)
from hankel_lab.transforms import SampledFunction

cells = st.lists(st.tuples(st.floats(0.0, 10.0), st.floats(0.01, 5.0)), min_size=1, max_size=30)


def split(pairs):
    v = np.array([p[0] for p in pairs])
    m = np.array([p[1] for p in pairs])
    return v, m


# ---------------------------------------------------------------------------
# measures

def test_measure_validation():
    with pytest.raises(InvalidArgumentError):
        WeightedMeasure.radial_power(0.0)
    with pytest.raises(InvalidArgumentError):
        WeightedMeasure.line_weight(-1.0)
    with pytest.raises(InvalidArgumentError):
        WeightedMeasure("counting", 1.0)
    with pytest.raises(OutOfDomainError):
        WeightedMeasure.radial_power(2.0).primitive(-1.0)


def test_radial_interval_closed_form():
    mu = WeightedMeasure.radial_power(3.0)
    assert mu.interval(1.0, 2.0) == pytest.approx(7.0 / 3.0)
    assert mu.domain == "half_line"
    assert mu.describe() == "mu_d(3)"


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(0.0, 4.0), x=st.floats(-20.0, 20.0))
def test_primitive_differentiates_to_density(alpha, x):
    nu = WeightedMeasure.line_weight(alpha)
    h = 1e-6
    fd = (nu.primitive(x + h) - nu.primitive(x - h)) / (2 * h)
    assert abs(fd - nu.density(x)) <= 1e-5 * nu.density(x)


def test_cells_tile_the_grid():
    nu = WeightedMeasure.line_weight(1.5)
    grid = np.linspace(-3.0, 3.0, 13)
    m = nu.cells(grid)
    assert m.sum() == pytest.approx(nu.interval(-3.25, 3.25))
    mu = WeightedMeasure.radial_power(2.0)
    assert mu.cells(np.linspace(0.0, 1.0, 5)).sum() == pytest.approx(mu.interval(0.0, 1.125))


# ---------------------------------------------------------------------------
# rearrangement and norms

def test_index_validation():
    with pytest.raises(InvalidArgumentError):
        LorentzIndex(1.0, 2.0)
    with pytest.raises(InvalidArgumentError):
        LorentzIndex(2.0, 0.5)
    assert LorentzIndex(2.0, math.inf).omega == 2.0


def test_rearrangement_of_steps():
    r = rearrange_cells([1.0, 3.0, 0.0, 2.0], [1.0, 0.5, 7.0, 2.0])
    np.testing.assert_array_equal(r.levels, [3.0, 2.0, 1.0])
    np.testing.assert_allclose(r.breakpoints, [0.5, 2.5, 3.5])
    assert r.total_measure == 3.5
    np.testing.assert_array_equal(r(np.array([0.0, 0.6, 3.0, 4.0])), [3.0, 2.0, 1.0, 0.0])
    assert r.distribution(1.5) == 2.5
    assert r.distribution(5.0) == 0.0
    with pytest.raises(NotRearrangeableError):
        rearrange_cells([1.0], [math.inf])
    with pytest.raises(InvalidArgumentError):
        rearrange_cells([1.0, 2.0], [1.0])


@settings(max_examples=60, deadline=None)
@given(pairs=cells, seed=st.integers(0, 1000))
def test_rearrangement_invariant_under_permutation(pairs, seed):
    v, m = split(pairs)
    perm = np.random.default_rng(seed).permutation(v.size)
    mu = WeightedMeasure.radial_power(1.0)
    idx = LorentzIndex(1.5, 3.0)
    a = lorentz_norm((v, m), mu, idx)
    b = lorentz_norm((v[perm], m[perm]), mu, idx)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)
    r = rearrange_cells(v, m)
    assert np.all(np.diff(r.levels) <= 0)
    assert r.total_measure == pytest.approx(m[v > 0].sum())


@settings(max_examples=60, deadline=None)
@given(pairs=cells, q=st.floats(1.1, 6.0))
def test_lorentz_diagonal_is_lebesgue(pairs, q):
    v, m = split(pairs)
    mu = WeightedMeasure.radial_power(1.0)
    lor = lorentz_norm((v, m), mu, LorentzIndex(q, q))
    leb = lebesgue_norm((v, m), mu, q)
    assert lor == pytest.approx(leb, rel=1e-10, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(pairs=cells, q=st.floats(1.1, 4.0), s1=st.floats(1.0, 8.0), s2=st.floats(1.0, 8.0))
def test_normalized_lorentz_decreases_in_sigma(pairs, q, s1, s2):
    v, m = split(pairs)
    lo, hi = sorted((s1, s2))
    mu = WeightedMeasure.radial_power(1.0)
    a = (lo / q) ** (1 / lo) * lorentz_norm((v, m), mu, LorentzIndex(q, lo))
    b = (hi / q) ** (1 / hi) * lorentz_norm((v, m), mu, LorentzIndex(q, hi))
    assert b <= a * (1 + 1e-10) + 1e-300


def test_indicator_norms():
    # |E| = 8: ||1_E||_{q,sigma} = (q/sigma)^{1/sigma} 8^{1/q}
    f = ([1.0], [8.0])
    mu = WeightedMeasure.radial_power(1.0)
    assert lorentz_norm(f, mu, LorentzIndex(1.5, 2.0)) == pytest.approx(0.75 ** 0.5 * 4.0)
    assert lorentz_norm(f, mu, LorentzIndex(3.0, math.inf)) == pytest.approx(2.0)
    assert lebesgue_norm(f, mu, math.inf) == 1.0
    assert lorentz_norm(([0.0], [1.0]), mu, LorentzIndex(2.0, 2.0)) == 0.0


def test_sampled_function_uses_measure_cells():
    x = np.linspace(0.0, 4.0, 401)
    sf = SampledFunction(x, np.exp(-x))
    mu = WeightedMeasure.radial_power(2.0)
    # int_0^inf e^{-2r} r dr = 1/4; the step reading is first order in h = 0.01
    assert lebesgue_norm(sf, mu, 2.0) ** 2 == pytest.approx(0.25, abs=2e-3)
    r = decreasing_rearrangement(sf, mu)
    assert r.levels[0] == 1.0


@settings(max_examples=40, deadline=None)
@given(pairs=cells, q=st.floats(1.2, 4.0), sigma=st.floats(1.0, 6.0))
def test_dyadic_quasinorm_homogeneous_and_comparable(pairs, q, sigma):
    v, m = split(pairs)
    if not np.any(v > 0):
        return
    mu = WeightedMeasure.radial_power(1.0)
    idx = LorentzIndex(q, sigma)
    dq = dyadic_quasinorm((v, m), mu, idx)
    assert dyadic_quasinorm((2 * v, m), mu, idx) == pytest.approx(2 * dq, rel=1e-12)
    lor = lorentz_norm((v, m), mu, idx)
    # level sets sandwich f* between consecutive powers of two
    ratio = dq / lor
    assert 0.25 <= ratio <= 4.0 * (sigma / q + 1) ** (1 / sigma) * 2


def test_norm_report_json():
    mu = WeightedMeasure.radial_power(1.0)
    f = ([1.0, 2.0], [1.0, 1.0])
    rep = norm_report(f, mu, 2.0, math.inf, refined=([1.0, 2.0], [1.0, 1.0]))
    d = json.loads(rep.to_json())
    assert d["sigma"] == "inf"
    assert d["refinement_ratio"] == 1.0
    assert norm_report(f, mu, 2.0, kind="lebesgue").value == pytest.approx(math.sqrt(5))
    with pytest.raises(EmptyInputError):
        norm_report(None, mu, 2.0)
    with pytest.raises(InvalidArgumentError):
        norm_report(f, mu, 2.0, kind="sobolev")


# ---------------------------------------------------------------------------
# Besov

def test_besov_a0_q2_is_plancherel():
    def g(x):
        return (1 - x * x) ** 3

    l2sq = integrate.quad(lambda x: g(x) ** 2, -1, 1, epsabs=1e-14)[0]
    val = besov_b2aq(g, a=0.0, q=2.0, support=(-1.0, 1.0), k_max=14)
    assert val == pytest.approx(math.sqrt(2 * math.pi * l2sq), rel=1e-6)


def test_besov_from_transform_and_samples():
    ghat = lambda xi: np.exp(-0.5 * xi * xi)  # noqa: E731
    res = besov_b2aq(ghat=ghat, a=0.0, q=2.0, detail=True)
    assert res.value == pytest.approx(math.pi ** 0.25, rel=1e-9)
    assert res.terms.size == res.k_max + 1
    xi = np.linspace(-16.0, 16.0, 8193)
    sf = SampledFunction(xi, ghat(xi), "line")
    assert besov_b2aq(ghat=sf, a=0.0, q=2.0) == pytest.approx(math.pi ** 0.25, rel=1e-4)


def test_besov_weight_increases_norm():
    ghat = lambda xi: 1 / (1 + xi * xi) ** 2  # noqa: E731
    assert besov_b2aq(ghat=ghat, a=0.5, q=2.0) > besov_b2aq(ghat=ghat, a=0.0, q=2.0)
    assert besov_b2aq(ghat=ghat, a=0.5, q=1.0) > besov_b2aq(ghat=ghat, a=0.5, q=2.0)


def test_besov_preconditions():
    with pytest.raises(InvalidArgumentError):
        besov_b2aq()
    with pytest.raises(InvalidArgumentError):
        besov_b2aq(ghat=np.cos, q=0.5)
    with pytest.raises(UnsupportedInputError):
        besov_b2aq(np.cos, support=(0.0, math.inf))


# ---------------------------------------------------------------------------
# convolution and dilation

def test_conv_bound_and_exact_dilation():
    g = lambda x: np.exp(-x * x)  # noqa: E731
    zeta = lambda x: (1 + np.abs(x)) ** -3.0  # noqa: E731
    out = weighted_conv_bound_check(g, zeta, gamma=3.0, a=0.0, q=2.0, t=4.0)
    assert out["conv_ratio"] <= 1.0  # Young: ||zeta||_1 = 1 here
    # with a = 0 the dilation scaling is an identity
    assert out["dil_ratio"] == pytest.approx(1.0, rel=1e-6)
    lor = weighted_conv_bound_check(g, zeta, gamma=3.0, q=2.0, alpha=1.0, beta=0.25, sigma=2.0)
    assert np.isfinite(lor["conv_ratio"]) and lor["dil_ratio"] <= 1.0 + 1e-9


def test_conv_preconditions():
    g = zeta = np.exp
    with pytest.raises(PreconditionError):
        weighted_conv_bound_check(g, zeta, gamma=1.0, a=0.5, q=2.0)
    with pytest.raises(PreconditionError):
        weighted_conv_bound_check(g, zeta, gamma=3.0, a=0.5, q=2.0, q1=1.5)
    with pytest.raises(PreconditionError):
        weighted_conv_bound_check(g, zeta, gamma=3.0, q=2.0, alpha=0.4, beta=0.25, sigma=2.0)
    with pytest.raises(InvalidArgumentError):
        weighted_conv_bound_check(g, zeta, gamma=3.0, a=0.0, q=2.0, t=0.0)
