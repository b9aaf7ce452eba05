"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the lines as
they are produced; they are also collected in the terminal summary).
"""

import filecmp
import math
import time

import numpy as np
import pytest

from hankel_lab import cli
from hankel_lab.criteria import (
    ScaleGrid,
    XGrid,
    condition_iii,
    condition_iv,
    lqmud_direct,
)
from hankel_lab.experiments import (
    default_frequency_set,
    find_signs,
    lambda_ratio,
    run_chirp,
    run_equivalence,
    run_sharpness,
    salem_zygmund,
)
from hankel_lab.kernel_ops import decompose_hse, hardy_scan, kernest_check
from hankel_lab.multiplier_bank import (
    Multiplier,
    analyze,
    make_lp_partition,
    resolve_label,
    synthesize,
)
from hankel_lab.transforms import QuadratureSpec, fourier_bessel, hankel_eval, uniform_grid

D_LIST = (2.0, 2.5, 3.0, 4.0)


def gaussian(s):
    return np.exp(-0.5 * np.asarray(s, dtype=float) ** 2)


def c4_bump(s):
    """(1 - s^2)_+^5, four times continuously differentiable."""
    s = np.asarray(s, dtype=float)
    return np.where(s < 1.0, np.clip(1.0 - s * s, 0.0, None) ** 5, 0.0)


def smooth_bump_12(a=1.0):
    """C-infinity bump exp(4a - a/((r-1)(2-r))) on (1, 2), peak value 1."""

    def f(r):
        out = np.zeros(r.shape)
        i = (r > 1.0) & (r < 2.0)
        u = (r[i] - 1.0) * (2.0 - r[i])
        out[i] = np.exp(4.0 * a - a / u)
        return out

    return Multiplier(f, (1.0, 2.0), label="bump12")


# ---------------------------------------------------------------------------
# transforms

def test_c01_round_trip(acceptance):
    t0 = time.perf_counter()
    spec = QuadratureSpec(estimate_error=False)
    outer = QuadratureSpec(panels_per_oscillation=2.0, estimate_error=False)
    worst = 0.0
    # (input, its support, truncation of the outer integral, output window)
    cases = ((gaussian, (0.0, 10.0), 10.0, 6.0), (c4_bump, (0.0, 1.0), 160.0, 2.0))
    for f, support, rho_max, r_max in cases:
        for d in D_LIST:
            def inner(rho, d=d, f=f, support=support):
                return hankel_eval(d, f, rho, spec, support=support)

            r = np.linspace(0.0, r_max, 41)
            back = hankel_eval(d, inner, r, outer, support=(0.0, rho_max),
                               freq_offset=support[1])
            err = np.max(np.abs(back - f(r))) / np.max(np.abs(f(r)))
            worst = max(worst, float(err))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 30.0
    acceptance(1, "round trip", ok, f"max rel err {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_c02_gaussian_fixed_point(acceptance):
    rho = np.linspace(0.0, 8.0, 161)
    worst = 0.0
    for d in D_LIST:
        out = fourier_bessel(d, gaussian, rho, support=(0.0, 40.0))
        worst = max(worst, float(np.max(np.abs(out.values - gaussian(rho)))))
    ok = worst <= 1e-6
    acceptance(2, "gaussian fixed point", ok, f"max err {worst:.2e}")
    assert ok


def test_c03_dilation(acceptance):
    r = np.linspace(0.0, 6.0, 61)
    worst = 0.0
    for d in (2.0, 3.0):
        for t in (0.25, 2.0, 4.0):
            lhs = fourier_bessel(d, lambda s, t=t: c4_bump(np.asarray(s) / t), r,
                                 support=(0.0, t)).values
            rhs = t ** d * fourier_bessel(d, c4_bump, t * r, support=(0.0, 1.0)).values
            err = np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs))
            worst = max(worst, float(err))
    ok = worst <= 1e-8
    acceptance(3, "dilation identity", ok, f"max rel err {worst:.2e}")
    assert ok


# ---------------------------------------------------------------------------
# multiplier bank

def test_c04_partition_of_unity(acceptance):
    s = np.geomspace(1e-3, 1e3, 2048)
    err = float(np.max(np.abs(make_lp_partition().partition_sum(s) - 1.0)))
    ok = err <= 1e-12
    acceptance(4, "partition of unity", ok, f"max err {err:.2e}")
    assert ok


def test_c05_retract(acceptance):
    m = smooth_bump_12()
    grid = uniform_grid(1024.0, 0.25)
    G = {k: analyze(m, j=k, x_grid=grid) for k in range(-1, 3)}
    rho = np.linspace(1.0, 2.0, 401)
    err = float(np.max(np.abs(synthesize(G)(rho) - m(rho))))
    ok = err <= 1e-6
    acceptance(5, "retract identity", ok, f"sup err {err:.2e}")
    assert ok


# ---------------------------------------------------------------------------
# criteria

def test_c06_route_equality(acceptance):
    grid = ScaleGrid.dyadic(-3, 3)
    xgrid = XGrid(x_max=1024.0)
    worst = 0.0
    for label in ("one", "imagpow:1", "br:1"):
        m = resolve_label(label)
        iv = condition_iv(m, 2.0, 1.2, 1.2, 1.2, grid=grid, xgrid=xgrid, strict=False)
        direct = lqmud_direct(m, 2.0, 1.2, 1.2, grid=grid, xgrid=xgrid, strict=False)
        live = direct.values > 0
        assert np.array_equal(iv.values[~live], direct.values[~live])
        rel = np.abs(iv.values[live] - direct.values[live]) / direct.values[live]
        worst = max(worst, float(rel.max()), abs(iv.sup - direct.sup) / direct.sup)
    ok = worst <= 1e-10
    acceptance(6, "route equality", ok, f"max rel diff {worst:.2e}")
    assert ok


def test_c07_dyadic_covariance(acceptance):
    xgrid = XGrid(x_max=1024.0)
    worst = 0.0
    for d, p, q in ((2.0, 1.2, 1.2), (3.0, 7.0 / 6.0, 1.25)):
        e = d * (1.0 / p - 1.0 / q)
        for label in ("br:1", "imagpow:1"):
            m = resolve_label(label)
            m2 = m.dilate(2.0)
            for cond in (condition_iv, condition_iii):
                base = cond(m, d, p, q, q, grid=ScaleGrid.dyadic(-3, 4), xgrid=xgrid,
                            strict=False)
                shifted = cond(m2, d, p, q, q, grid=ScaleGrid.dyadic(-4, 3), xgrid=xgrid,
                               strict=False)
                # index i of the dilated scan is index i+1 of the original
                expect = 2.0 ** (-e) * base.values
                scale = np.max(np.abs(expect))
                worst = max(worst, float(np.max(np.abs(shifted.values - expect)) / scale),
                            abs(shifted.sup - 2.0 ** (-e) * base.sup) / base.sup)
    ok = worst <= 1e-12
    acceptance(7, "dyadic covariance", ok, f"max rel err {worst:.2e}")
    assert ok


@pytest.mark.slow
def test_c08_equivalence_shadow(acceptance):
    bank = ("one", "imagpow:1", "br:1", "chirp:8")
    entries = []
    for d, pqs in ((2.0, (1.2, 1.2, 1.2)), (3.0, (7.0 / 6.0, 1.25, 1.25))):
        rep = run_equivalence(bank, (d,), (pqs,))
        entries += rep["results"]["entries"]
    agree = all(e["verdicts_agree"] for e in entries)
    ratios = [e["ratio"] for e in entries]
    in_band = all(1.0 / 3.0 <= r <= 3.0 for r in ratios)
    drift = max(abs(e["ratio_refined"] / e["ratio"] - 1.0) for e in entries)
    verdicts = sorted({e["iii"]["verdict"] for e in entries})
    ok = agree and in_band and drift <= 0.10
    acceptance(8, "equivalence shadow", ok,
               f"verdicts agree={agree} {verdicts}, ratio range "
               f"[{min(ratios):.2f}, {max(ratios):.2f}], refined drift {drift:.3f}")
    assert ok


# ---------------------------------------------------------------------------
# kernel operations

@pytest.mark.slow
def test_c09_kernel_bound(acceptance):
    phi = make_lp_partition().phi
    base_r = np.linspace(0.0, 40.0, 161)
    fine_r = np.linspace(0.0, 40.0, 321)
    fine_spec = QuadratureSpec().tightened()
    worst, parts = 0.0, []
    finite = True
    for a, b in ((2, 2), (3, 3), (1, 3)):
        for beta in (0, 1):
            for gamma in (0, 1):
                c0 = kernest_check(phi, a, b, 4, beta, gamma, base_r)["empirical_C"]
                c1 = kernest_check(phi, a, b, 4, beta, gamma, fine_r,
                                   spec=fine_spec)["empirical_C"]
                finite &= math.isfinite(c0) and math.isfinite(c1)
                change = abs(c1 / c0 - 1.0)
                worst = max(worst, change)
                parts.append(f"({a},{b},{beta}{gamma})={c0:.3g}")
    ok = finite and worst <= 0.20
    acceptance(9, "kernel bound", ok, f"max refinement change {worst:.3f}; " + " ".join(parts))
    assert ok


def test_c10_decomposition(acceptance):
    def f(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape)
        i = (s > 0.25) & (s < 8.0)
        u = (s[i] - 0.25) * (8.0 - s[i])
        out[i] = np.exp(-8.0 / u)
        return out

    r = np.geomspace(1.0 / 16.0, 64.0, 160)
    worst = 0.0
    for label in ("one", "imagpow:1"):
        for j in (-2, 0, 2):
            pieces = decompose_hse(resolve_label(label), j, f, 2.0, r, (0.25, 8.0))
            assert np.max(np.abs(pieces.direct)) > 0
            worst = max(worst, pieces.partition_error())
    ok = worst <= 1e-10
    acceptance(10, "decomposition exactness", ok, f"max rel err {worst:.2e}")
    assert ok


def test_c11_hardy_decay(acceptance):
    t0 = time.perf_counter()
    rep = hardy_scan(resolve_label("br:0.5"), 2.0, 1.2, 1.2, 1.2)
    elapsed = time.perf_counter() - t0
    ok = (rep.exponent_neg >= 0.8 * rep.theory_neg > 0
          and rep.exponent_pos >= 0.8 * rep.theory_pos > 0 and elapsed < 300.0)
    acceptance(11, "hardy decay", ok,
               f"m<0: {rep.exponent_neg:.3f} (theory {rep.theory_neg:.3f}), "
               f"m>0: {rep.exponent_pos:.3f} (theory {rep.theory_pos:.3f}), {elapsed:.1f} s")
    assert ok


# ---------------------------------------------------------------------------
# experiments

def test_c12_sharpness(acceptance):
    res = run_sharpness()["results"]
    corr = res["b_at_1_vs_logN"]["corr"]
    c = res["l2_c_through_origin"]
    slope = res["l2_vs_logN"]["slope"]
    lp2 = np.array(res["lp2_values"])
    spread = float(np.max(np.abs(lp2 / lp2.mean() - 1.0)))
    ok = (res["N_done"] == [16, 32, 64, 128, 256, 512, 1024] and corr >= 0.99 and c > 0
          and slope > 0 and spread <= 0.20)
    acceptance(12, "sharpness", ok,
               f"corr {corr:.5f}, l2 ~ {c:.4f} log N, lp2 spread {spread:.4f}")
    assert ok


def test_c13_chirp(acceptance):
    res = run_chirp()["results"]
    e1 = res["fits"]["1"]["slope"]
    e43 = res["fits"]["1.33333"]["slope"]
    q2 = res["q2_spread"]
    plateau_min = min(p["min_sqrtN_K"] for p in res["plateau"])
    plateau_max = max(p["max_sqrtN_K"] for p in res["plateau"])
    decay = [p["max_x4_K"] for p in res["decay"]]
    decay_ok = all(math.isfinite(v) for v in decay) and decay[-1] <= decay[0]
    ok = (abs(e1 - 0.5) <= 0.05 and abs(e43 - 0.25) <= 0.05 and q2 <= 0.01
          and plateau_min >= 0.1 and plateau_max <= 1.0 and decay_ok)
    acceptance(13, "chirp scaling", ok,
               f"exponents {e1:.3f}/{e43:.3f}, q=2 spread {q2:.1e}, plateau "
               f"[{plateau_min:.3f}, {plateau_max:.3f}], x^4|K| max {decay[0]:.3g} -> {decay[-1]:.3g}")
    assert ok


def test_c14_salem_zygmund(acceptance):
    c512 = salem_zygmund(R=512, rho_list=(2.0,), trials=200, seed=0)["results"]["per_rho"]["2"]["C"]
    c1024 = salem_zygmund(R=1024, rho_list=(2.0,), trials=200, seed=0)["results"]["per_rho"]["2"]["C"]
    S = default_frequency_set(64, 4096, seed=0)
    fs = find_signs(S, 4096, seed=0, attempts=200)
    ok = c512 <= 3.0 and abs(c1024 / c512 - 1.0) <= 0.25 and fs["success"]
    acceptance(14, "salem-zygmund", ok,
               f"C(512) {c512:.3f}, C(1024) {c1024:.3f}, find_signs sup {fs['sup']:.4f} "
               f"<= {fs['threshold']:.4f} after {fs['attempts']} attempt(s)")
    assert ok


def test_c15_lambda_ratio(acceptance):
    Ns = (8, 16, 32)
    # lacunary S = {2^k : k < log2 N}
    lac = [lambda_ratio([2 ** k for k in range(int(math.log2(N)))], 4, trials=100,
                        seed=1)["ratio"] for N in Ns]
    full = [lambda_ratio(list(range(1, N + 1)), 4, trials=1, seed=1,
                         coeffs=np.full(N, N ** -0.5))["ratio"] for N in Ns]
    lac_spread = max(lac) / min(lac)
    slope = float(np.polyfit(np.log(Ns), np.log(full), 1)[0])
    ok = lac_spread <= 1.5 and abs(slope - 0.25) <= 0.05
    acceptance(15, "lambda ratio", ok,
               f"lacunary {['%.3f' % v for v in lac]} (spread {lac_spread:.3f}), "
               f"interval exponent {slope:.3f}")
    assert ok


def test_c16_reproducibility(acceptance, tmp_path):
    runs = (["zafran", "-p", "N=16", "--seed", "11"],
            ["lambda", "-p", "set=lacunary", "-p", "N=16", "--seed", "5"],
            ["chirp", "-p", "N_list=64,128"])
    same = True
    for args in runs:
        outs = []
        for k in range(2):
            out = tmp_path / f"{args[0]}_{k}"
            assert cli.main(args + ["--out", str(out)]) == 0
            outs.append(out)
        for ext in ("json", "csv"):
            a = sorted(outs[0].glob(f"*.{ext}"))
            b = sorted(outs[1].glob(f"*.{ext}"))
            same &= len(a) == len(b) > 0
            same &= all(filecmp.cmp(x, y, shallow=False) for x, y in zip(a, b))
    acceptance(16, "reproducibility", same, "byte-identical JSON/CSV for zafran, lambda, chirp")
    assert same
