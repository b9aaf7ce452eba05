"""Named experiments and reproducible report emission.

Every experiment returns a plain dict report with the schema tag, the
package version, an echo of its configuration, a ``table`` (columns/rows,
written as CSV) and optional ``series`` (x/y lists, drawn as SVG).
Randomness comes from Philox streams keyed by (seed, stream id), so a
trial's draws do not depend on how many other trials ran.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from . import SCHEMA, __version__
from .criteria import (
    ScaleGrid,
    XGrid,
    condition_iii,
    condition_iv,
    besov_condition,
    default_epsilon,
    lf_norm,
    lp2_condition,
    u_exponent,
)
from .errors import AccuracyFailure, EmptyInputError, InvalidArgumentError, PreconditionError
from .multiplier_bank import _SMOOTHSTEP, chirp_cutoff, resolve_label, sharp_pair
from .spaces import LorentzIndex, WeightedMeasure, lorentz_norm
from .transforms import QuadratureSpec, hankel_eval, panel_rule

# ---------------------------------------------------------------------------
# configuration and randomness


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    seed: int = None
    stream: int = 0
    out_dir: str = None

    def echo(self):
        return {"experiment": self.experiment, "params": _plain(self.params), "seed": self.seed,
                "stream": self.stream}

    @classmethod
    def from_text(cls, text, experiment=""):
        """Parse ``key = value`` lines; values are JSON when possible, else strings.

        Comma-separated values become lists.  ``seed``, ``stream`` and
        ``out_dir`` are lifted out of ``params``.
        """
        params = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidArgumentError(f"config line without '=': {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            params[key] = parse_value(value)
        seed = params.pop("seed", None)
        stream = params.pop("stream", 0)
        out_dir = params.pop("out_dir", None)
        experiment = params.pop("experiment", experiment)
        return cls(experiment, params, seed, stream, out_dir)

    @classmethod
    def from_file(cls, path, experiment=""):
        return cls.from_text(Path(path).read_text(), experiment)


def parse_value(value):
    if "," in value and not value.startswith("["):
        return [parse_value(v.strip()) for v in value.split(",") if v.strip()]
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        pass
    try:
        return float(Fraction(value))
    except (ValueError, ZeroDivisionError):
        return value


@dataclass
class RandomSignDraw:
    seed: int
    stream: int
    signs: np.ndarray

    @property
    def length(self):
        return int(self.signs.size)


def rng_stream(seed, stream=0):
    """Counter-based generator for (seed, stream)."""
    if seed is None:
        raise PreconditionError("a seed is required for randomized experiments")
    key = np.array([int(seed) % 2 ** 64, int(stream) % 2 ** 64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def draw_signs(seed, stream, R):
    rng = rng_stream(seed, stream)
    signs = 2 * rng.integers(0, 2, size=int(R)) - 1
    return RandomSignDraw(int(seed), int(stream), signs.astype(float))


# ---------------------------------------------------------------------------
# report helpers

def _plain(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.complexfloating, complex)):
        return {"re": _plain(obj.real), "im": _plain(obj.imag)}
    return obj


def make_report(experiment, config, results, table=None, series=None, diagnostics=None):
    return _plain({"schema": SCHEMA, "version": __version__, "experiment": experiment,
                   "config": config, "results": results,
                   "table": table or {"columns": [], "rows": []}, "series": series or {},
                   "diagnostics": diagnostics or {}})


def _fit(x, y):
    """Least-squares slope, intercept and correlation of y on x."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size < 2:
        return {"slope": None, "intercept": None, "corr": None}
    slope, intercept = np.polyfit(x, y, 1)
    corr = float(np.corrcoef(x, y)[0, 1]) if x.size > 2 else 1.0
    return {"slope": float(slope), "intercept": float(intercept), "corr": corr}


# ---------------------------------------------------------------------------
# sharpness at the endpoint

def run_sharpness(N_list=(16, 32, 64, 128, 256, 512, 1024), d=2.0, sigma_list=(1.0, 2.0),
                  c=0.125, points_per_unit=64, n_rho=9, spec=None):
    """Growth of the endpoint pair (m_N, f_N) in log N.

    Per N: ||f_N||_{L^{p_d,sigma}(mu_d)}, |B_d f_N(rho)| for |rho - 1| <= c/N,
    ||m_N B_d f_N||_{L^2(mu_d)}, the cross-phase integral
    int_1^N s^{-1} e^{-i(rho+1)s} ds near rho = 1 and the lp2 value of m_N.
    An accuracy failure at some N ends the scan with a partial report.
    """
    if not d > 1:
        raise PreconditionError("need d > 1")
    if min(N_list) < 16:
        raise PreconditionError("need N >= 16")
    spec = spec or QuadratureSpec()
    p_d = 2.0 * d / (d + 1.0)
    mu = WeightedMeasure.radial_power(d)
    rows, done, failure = [], [], None
    per_N = {}
    for N in sorted(int(n) for n in N_list):
        try:
            m_N, f_N = sharp_pair(N, d, c, points_per_unit)
            grid = f_N.grid
            edges = np.concatenate([[1.0], 0.5 * (grid[1:] + grid[:-1]), [float(N)]])
            cells = (np.abs(f_N.values), np.diff(mu.primitive(edges)))
            lorentz = {s: lorentz_norm(cells, mu, LorentzIndex(p_d, s)) for s in sigma_list}
            rho = 1.0 + (c / N) * np.linspace(-1.0, 1.0, n_rho)
            bf = hankel_eval(d, f_N.evaluator, rho, spec, support=(1.0, float(N)),
                             freq_offset=1.0)
            b_at_1 = float(abs(bf[n_rho // 2]))
            gr, gw = panel_rule(1.0, 1.0 + c / N, 1.0, spec)
            bg = hankel_eval(d, f_N.evaluator, gr, spec, support=(1.0, float(N)),
                             freq_offset=1.0)
            l2 = math.sqrt(float(np.sum(np.abs(m_N(gr) * bg) ** 2 * gr ** (d - 1.0) * gw)))
            s, w = panel_rule(1.0, float(N), 3.0, spec)
            cross = np.abs(np.exp(-1j * np.outer(rho + 1.0, s)) @ (w / s))
            lp2 = lp2_condition(m_N, d, p_d, refine=False).sup
        except AccuracyFailure as exc:
            failure = {"N": N, "message": str(exc), "achieved": exc.achieved}
            break
        done.append(N)
        per_N[N] = {"lorentz": lorentz, "b_at_1": b_at_1, "b_window": np.abs(bf),
                    "l2": l2, "cross_max": float(cross.max()), "lp2": lp2}
        rows.append([N, math.log(N), b_at_1, l2, float(cross.max()), lp2]
                    + [lorentz[s] for s in sigma_list])
    logs = np.log(np.array(done, float))
    b1 = np.array([per_N[N]["b_at_1"] for N in done])
    l2s = np.array([per_N[N]["l2"] for N in done])
    lp2s = np.array([per_N[N]["lp2"] for N in done])
    results = {
        "p_d": p_d,
        "N_done": done,
        "b_at_1_vs_logN": _fit(logs, b1),
        "l2_vs_logN": _fit(logs, l2s),
        "l2_over_logN": (l2s / logs).tolist(),
        "l2_c_through_origin": float(np.sum(l2s * logs) / np.sum(logs ** 2)) if done else None,
        "lp2_values": lp2s.tolist(),
        "lp2_spread": float(lp2s.max() / lp2s.min()) if done else None,
        "lorentz_over_log": {str(s): [per_N[N]["lorentz"][s] / math.log(N) ** (1.0 / s)
                                      for N in done] for s in sigma_list},
        "cross_max": [per_N[N]["cross_max"] for N in done],
    }
    cols = ["N", "logN", "abs_Bf_at_1", "l2_mN_Bf", "cross_max", "lp2"] + [
        f"lorentz_sigma_{s:g}" for s in sigma_list]
    series = {"abs_Bf_at_1": {"x": logs.tolist(), "y": b1.tolist()},
              "l2_mN_Bf": {"x": logs.tolist(), "y": l2s.tolist()}}
    diag = {"partial": failure is not None, "failure": failure}
    config = {"N_list": list(N_list), "d": d, "sigma_list": list(sigma_list), "c": c,
              "points_per_unit": points_per_unit, "n_rho": n_rho}
    return make_report("sharpness", config, results, {"columns": cols, "rows": rows}, series,
                       diag)


# ---------------------------------------------------------------------------
# chirp kernels

def chirp_kernel_fft(N, period_factor=32, dx=0.25):
    """K_N = F^{-1}[chi e^{i N xi^2}] on x = k dx, |x| < period/2, by one FFT.

    Trapezoid sampling in xi with step 2 pi / P (P = period_factor * N)
    makes the FFT exact up to the aliases K_N(x + jP), which lie in the
    decaying tails.
    """
    P = period_factor * float(N)
    M = int(round(P / dx))
    h = 2.0 * math.pi / P
    xi = h * np.arange(M)
    g = chirp_cutoff(xi) * np.exp(1j * float(N) * xi * xi)
    K = (h / (2.0 * math.pi)) * M * np.fft.ifft(g)
    K = np.fft.fftshift(K)
    x = dx * (np.arange(M) - M // 2)
    return x, K


def _poly_compose(coeffs, alpha, beta):
    """Coefficients in w of sum_k c_k (alpha w + beta)^k (exact Fractions)."""
    out = [Fraction(0)] * len(coeffs)
    for k, c in enumerate(coeffs):
        if c == 0:
            continue
        for i in range(k + 1):
            out[i] += c * math.comb(k, i) * alpha ** i * beta ** (k - i)
    return out


def _jump_polys():
    """Breakpoint e -> coefficients (in w = xi - e) of chi_right - chi_left."""
    S = _SMOOTHSTEP
    one = [Fraction(1)] + [Fraction(0)] * (len(S) - 1)
    q = Fraction(4, 3)
    jumps = {
        Fraction(1, 2): _poly_compose(S, Fraction(4), Fraction(0)),
        Fraction(3, 4): [a - b for a, b in zip(one, _poly_compose(S, Fraction(4), Fraction(1)))],
        Fraction(5, 4): [a - b for a, b in zip(_poly_compose(S, -q, Fraction(1)), one)],
        Fraction(2): [-a for a in _poly_compose(S, -q, Fraction(0))],
    }
    return {float(e): np.array([float(c) for c in cs]) for e, cs in jumps.items()}


def chirp_kernel_contour(N, x, nodes=80):
    """K_N(x) for x outside the stationary range via steepest-descent paths.

    chi is piecewise polynomial, so K_N is a sum over its breakpoints e of
    int_0^inf D_e(xi_e(u) - e) xi_e'(u) e^{i psi(e) - u} du with
    psi(xi) = N xi^2 + x xi, D_e the jump polynomial at e (vanishing to
    order 5) and xi_e the path with psi(xi_e(u)) = psi(e) + i u.
    Requires 2 N xi + x to keep one sign on [1/2, 2].
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    N = float(N)
    lo, hi = 2 * N * 0.5 + x, 2 * N * 2.0 + x
    if np.any(lo * hi <= 0):
        raise PreconditionError("stationary point inside the chirp support")
    u, wu = np.polynomial.laguerre.laggauss(nodes)
    out = np.zeros(x.shape, dtype=complex)
    for e, coeffs in _jump_polys().items():
        a = 2 * N * e + x
        s = np.sign(a)[:, None]
        root_c = np.abs(a)[:, None]
        root = np.sqrt(a[:, None] ** 2 + 4j * N * u[None, :])
        w = 2j * s * u[None, :] / (root + root_c)
        dxi = 1j * s / root
        D = np.polynomial.polynomial.polyval(w, coeffs)
        phase = np.exp(1j * (N * e * e + x * e))
        out += phase * ((D * dxi) @ wu)
    return out / (2.0 * math.pi)


def _lq_norm_line(vals, dx, q):
    return float(np.sum(np.abs(vals) ** q) * dx) ** (1.0 / q)


def run_chirp(N_list=(64, 128, 256, 512, 1024, 2048), q_list=(1.0, 4.0 / 3.0, 2.0), dx=0.25,
              decay_L=4):
    """Scaling of ||K_N||_q, the plateau and the decay beyond 4N.

    Orientation: with F^{-1}[g](x) = (2 pi)^{-1} int g e^{i x xi}, the phase
    N xi^2 + x xi is stationary at xi = -x/(2N), so the plateau sits on
    x in [-5N/2, -3N/2] and the far region is x < -4N.  Both sides are
    reported.
    """
    N_list = sorted(int(n) for n in N_list)
    if N_list[0] < 64:
        raise PreconditionError("need N >= 64")
    rows = []
    norms = {q: [] for q in q_list}
    plateau, decay, agree = [], [], []
    for N in N_list:
        x, K = chirp_kernel_fft(N, dx=dx)
        row = [N]
        for q in q_list:
            v = _lq_norm_line(K, dx, q)
            norms[q].append(v)
            row.append(v)
        band = (x >= -2.5 * N) & (x <= -1.5 * N)
        mirror = (x >= 1.5 * N) & (x <= 2.5 * N)
        pl_min = float(np.min(np.abs(K[band])) * math.sqrt(N))
        pl_max = float(np.max(np.abs(K[band])) * math.sqrt(N))
        mirror_max = float(np.max(np.abs(K[mirror])) * math.sqrt(N))
        plateau.append({"N": N, "min_sqrtN_K": pl_min, "max_sqrtN_K": pl_max,
                        "mirror_max_sqrtN_K": mirror_max})
        xs = 4.0 * N * 2.0 ** (np.arange(1, 33) / 8.0)
        far = np.concatenate([-xs, xs])
        kc = chirp_kernel_contour(N, far)
        stat = np.abs(kc) * np.abs(far) ** decay_L
        decay.append({"N": N, "max_x4_K": float(stat.max()),
                      "max_x4_K_far_side": float(stat[: xs.size].max()),
                      "max_x4_K_other_side": float(stat[xs.size:].max())})
        # the two routes must agree where the FFT is accurate
        probe = -4.0 * N * 2.0 ** (np.arange(1, 9) / 8.0)
        idx = np.round((probe - x[0]) / dx).astype(int)
        kf = K[idx]
        kcp = chirp_kernel_contour(N, x[idx])
        agree.append(float(np.max(np.abs(kf - kcp))))
        row += [pl_min, pl_max, decay[-1]["max_x4_K"]]
        rows.append(row)
    logN = np.log(np.array(N_list, float))
    fits = {}
    for q in q_list:
        f = _fit(logN, np.log(norms[q]))
        f["expected"] = 1.0 / q - 0.5
        fits[f"{q:g}"] = f
    results = {"fits": fits, "norms": {f"{q:g}": norms[q] for q in q_list},
               "plateau": plateau, "decay": decay, "route_agreement_max_abs": agree,
               "plateau_orientation": "negative x"}
    if 2.0 in norms:
        n2 = np.array(norms[2.0])
        results["q2_spread"] = float(n2.max() / n2.min() - 1.0)
    cols = ["N"] + [f"norm_q_{q:g}" for q in q_list] + ["plateau_min", "plateau_max",
                                                        "decay_x4_max"]
    series = {f"norm_q_{q:g}": {"x": logN.tolist(), "y": np.log(norms[q]).tolist()}
              for q in q_list}
    config = {"N_list": N_list, "q_list": list(q_list), "dx": dx, "decay_L": decay_L}
    return make_report("chirp", config, results, {"columns": cols, "rows": rows}, series)


# ---------------------------------------------------------------------------
# random trigonometric sums

def trig_sup(freqs, coeffs, R, oversample=16):
    """sup_theta |sum c_k e^{i k theta}| on a grid of oversample * R points."""
    L = int(oversample * max(int(R), 1))
    freqs = np.asarray(freqs, dtype=int)
    if freqs.size and (freqs.min() < 0 or freqs.max() >= L):
        raise InvalidArgumentError("frequencies must lie in [0, oversample*R)")
    c = np.zeros(L, dtype=complex)
    np.add.at(c, freqs, coeffs)
    return float(np.max(np.abs(np.fft.ifft(c)) * L))


def salem_zygmund(a=None, R=512, rho_list=(2.0,), trials=200, seed=0, oversample=16):
    """Monte Carlo (E sup_theta |F_R(t, theta)|^rho)^{1/rho} over Rademacher draws.

    Trial i uses the Philox stream (seed, i).  The empirical C is that
    moment divided by sqrt(rho log R) ||a||_2.
    """
    if R < 16 and a is None:
        raise PreconditionError("need R >= 16")
    a = np.full(int(R), 1.0 / math.sqrt(R)) if a is None else np.asarray(a, dtype=complex)
    if a.size == 0:
        raise EmptyInputError("no coefficients")
    R_eff = a.size
    freqs = np.arange(1, R_eff + 1)
    sups = np.empty(trials)
    for t in range(trials):
        signs = draw_signs(seed, t, R_eff).signs
        sups[t] = trig_sup(freqs, a * signs, R_eff + 1, oversample)
    norm_a = float(np.sqrt(np.sum(np.abs(a) ** 2)))
    logR = math.log(max(R_eff, 2))
    res = {}
    for rho in rho_list:
        mom = float(np.mean(sups ** rho)) ** (1.0 / rho)
        se = float(np.std(sups ** rho, ddof=1) / math.sqrt(trials)) if trials > 1 else math.inf
        rel_se = se / np.mean(sups ** rho) / rho
        res[f"{rho:g}"] = {"moment": mom, "C": mom / (math.sqrt(rho * logR) * norm_a),
                           "rel_stderr": float(rel_se)}
    results = {"R": R_eff, "per_rho": res, "max_sup": float(sups.max()),
               "min_sup": float(sups.min())}
    diag = {"widened_confidence": trials < 100}
    config = {"R": R_eff, "rho_list": list(rho_list), "trials": trials, "seed": seed,
              "oversample": oversample, "a": "flat" if a is None else "given"}
    rows = [[t, float(sups[t])] for t in range(trials)]
    return make_report("salem_zygmund", config, results,
                       {"columns": ["trial", "sup"], "rows": rows}, diagnostics=diag)


def _fejer_kernel(x):
    """F^{-1}[(1-|xi|)_+](x) = (2 pi)^{-1} (sin(x/2)/(x/2))^2."""
    half = 0.5 * np.asarray(x, dtype=float)
    return np.sinc(half / math.pi) ** 2 / (2.0 * math.pi)


def omega_norm(S, signs, r, oversample=16):
    """||omega_N||_{L^r(R)} for omega_N = N^{-1} sum rho_k e^{ikx} F^{-1}[eta](x).

    The trigonometric factor is 2 pi periodic, so the integral over R is
    int_0^{2 pi} |P|^r sum_n |F^{-1}[eta](x + 2 pi n)|^r dx.  With
    F^{-1}[eta](x) = 2 sin^2(x/2) / (pi x^2) the periodized sum is
    sin^{2r}(x/2) (2/pi)^r sum_n (x + 2 pi n)^{-2r}, a pair of Hurwitz zeta values.
    """
    S = np.asarray(S, dtype=int)
    N = S.size
    L = int(oversample * (S.max() + 1))
    c = np.zeros(L, dtype=complex)
    np.add.at(c, S, np.asarray(signs, float) / N)
    P = np.fft.ifft(c) * L
    theta = 2.0 * math.pi * np.arange(L) / L
    two_pi = 2.0 * math.pi
    frac = theta / two_pi
    tails = two_pi ** (-2.0 * r) * (hurwitz_zeta(2.0 * r, 1.0 + frac)
                                    + hurwitz_zeta(2.0 * r, 1.0 - frac + (frac == 0)))
    tails[0] = two_pi ** (-2.0 * r) * 2.0 * hurwitz_zeta(2.0 * r, 1.0)
    per = _fejer_kernel(theta) ** r + np.sin(0.5 * theta) ** (2 * r) * (2.0 / math.pi) ** r * tails
    val = float(np.sum(np.abs(P) ** r * per) * (two_pi / L))
    return val ** (1.0 / r)


def find_signs(S, R, seed=0, attempts=200, threshold_factor=3.0, oversample=16,
               check_norms=True):
    """Random search for signs with sup_x |N^{-1} sum rho_k e^{ikx}| <= 3 N^{-1/2} sqrt(log R).

    Attempt i draws from the Philox stream (seed, i).  When every attempt
    fails the best draw is returned with ``success`` False.
    """
    S = np.asarray(sorted(int(k) for k in S), dtype=int)
    if S.size == 0:
        raise EmptyInputError("empty frequency set")
    if S.min() < 0 or S.max() > R:
        raise PreconditionError("S must lie in [0, R]")
    N = S.size
    thr = threshold_factor * math.sqrt(math.log(max(R, 2))) / math.sqrt(N)
    best = None
    used = 0
    for i in range(attempts):
        used = i + 1
        draw = draw_signs(seed, i, N)
        sup = trig_sup(S, draw.signs / N, R + 1, oversample)
        if best is None or sup < best[0]:
            best = (sup, draw)
        if sup <= thr:
            break
    sup, draw = best
    out = {"success": bool(sup <= thr), "sup": sup, "threshold": thr, "attempts": used,
           "signs": draw.signs.astype(int).tolist(), "stream": draw.stream, "N": N, "R": R}
    if check_norms:
        scale = math.sqrt(math.log(max(R, 2))) / math.sqrt(N)
        out["omega_norm_ratio"] = {str(r): omega_norm(S, draw.signs, r) / scale
                                   for r in (2, 4)}
    return out


def lambda_ratio(S, p_prime=4, trials=100, seed=0, coeffs=None):
    """max over trials of (mean_x |sum a_k e^{ikx}|^{p'})^{1/p'} / ||a||_2.

    The mean over [0, 2 pi) is exact: equispaced sampling with more than
    p' max(S) points integrates the trigonometric polynomial |P|^{p'}.
    Coefficients are random complex unit vectors unless ``coeffs`` is given.
    """
    if p_prime not in (4, 6):
        raise PreconditionError("p' must be 4 or 6")
    S = np.asarray(sorted(int(k) for k in S), dtype=int)
    if S.size == 0:
        raise EmptyInputError("empty frequency set")
    L = 1 << int(math.ceil(math.log2(p_prime * int(S.max()) + 2)))

    def ratio(a):
        c = np.zeros(L, dtype=complex)
        np.add.at(c, S, a)
        P = np.fft.ifft(c) * L
        return float(np.mean(np.abs(P) ** p_prime)) ** (1.0 / p_prime) / float(
            np.sqrt(np.sum(np.abs(a) ** 2)))

    if coeffs is not None:
        vals = [ratio(np.asarray(coeffs, dtype=complex))]
    else:
        vals = []
        for t in range(trials):
            rng = rng_stream(seed, t)
            a = rng.standard_normal(S.size) + 1j * rng.standard_normal(S.size)
            vals.append(ratio(a / np.linalg.norm(a)))
    return {"ratio": max(vals), "mean_ratio": float(np.mean(vals)), "trials": len(vals),
            "p_prime": p_prime, "N": int(S.size)}


# ---------------------------------------------------------------------------
# the rank-one functional

def default_frequency_set(N, R, seed=0):
    """Lacunary {2^k} when it fits in [0, R], else a seeded random N-subset of [0, R]."""
    if N < 1:
        raise PreconditionError("need N >= 1")
    if N <= 63 and 2 ** (N - 1) <= R:
        return [2 ** k for k in range(N)]
    rng = rng_stream(seed, 2 ** 32)
    return sorted(int(k) for k in rng.choice(int(R) + 1, size=int(N), replace=False))


def _eta_integral(m, k, nodes=32):
    """int m(xi) eta(xi - k) dxi by Gauss-Legendre on [k-1, k] and [k, k+1]."""
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    total = 0.0
    for lo in (k - 1.0, float(k)):
        xi = lo + 0.5 * (gx + 1.0)
        total = total + np.sum(m(xi) * (1.0 - np.abs(xi - k)) * 0.5 * gw)
    return complex(total)


def v_functional(m, S, signs):
    N = len(S)
    return sum(r * _eta_integral(m, k) for k, r in zip(S, signs)) / N


def omega_hat_l2sq(S, signs):
    """||omega_hat_N||_2^2 exactly: int eta^2 = 2/3, int eta(.)eta(.-1) = 1/6."""
    S = list(S)
    N = len(S)
    sgn = dict(zip(S, signs))
    cross = sum(sgn[k] * sgn[k + 1] for k in S if k + 1 in sgn)
    return (N * 2.0 / 3.0 + 2.0 * cross / 6.0) / N ** 2


def run_zafran(N=16, R=None, p=1.2, q_list=(1.0, 1.2, 1.5, 2.0), seed=0, S=None,
               attempts=200, test_labels=("one", "imagpow:1", "imagpow:3")):
    """The quantities entering the rank-one operator argument.

    Reports ||omega_hat_N||_2^2 N by the exact formula and by quadrature of
    the Fejer sum, v_N on test multipliers against ||m||_inf, both bound
    families in q, and the witness identity v_N(omega_hat_N) = ||omega_hat_N||_2^2.
    """
    if R is None:
        R = int(round(N ** (p / (p - 1.0) / 2.0)))
    R = int(R)
    S = list(S) if S is not None else default_frequency_set(N, R, seed)
    N = len(S)
    fs = find_signs(S, R, seed, attempts, check_norms=False)
    signs = np.array(fs["signs"], float)
    exact = omega_hat_l2sq(S, signs)
    # second route: quadrature of |sum rho_k eta(xi - k)|^2 / N^2 piece by piece
    gx, gw = np.polynomial.legendre.leggauss(8)
    sset = dict(zip(S, signs))
    lo, hi = min(S) - 1, max(S) + 1
    quad = 0.0
    for a in range(lo, hi):
        xi = a + 0.5 * (gx + 1.0)
        v = sset.get(a, 0.0) * (1.0 - (xi - a)) + sset.get(a + 1, 0.0) * (xi - a)
        quad += float(np.sum(v * v * 0.5 * gw))
    quad /= N ** 2
    omega_hat = _OmegaHat(S, signs)
    v_omega = v_functional(omega_hat, S, signs)
    tests = {}
    for label in test_labels:
        m = resolve_label(label)
        v = v_functional(m, S, signs)
        probe = np.linspace(min(S) - 1.0, max(S) + 1.0, 4001)
        sup = float(np.max(np.abs(m(probe))))
        tests[label] = {"v": abs(v), "sup_m": sup, "v_over_sup": abs(v) / sup if sup else None}
    logR = math.sqrt(math.log(max(R, 2)))
    bounds = {}
    for q in q_list:
        qp = math.inf if q == 1.0 else q / (q - 1.0)
        rq = 1.0 if q == 1.0 else R ** (1.0 / qp)
        bounds[f"{q:g}"] = {
            "linfctl_factor": min(1.0, N ** -0.5 * rq * logR),
            "upper": min(N ** (1.0 / q - 0.5), N ** (-1.0 + 1.0 / q) * rq * logR),
        }
    results = {"N": N, "R": R, "S": S, "signs": signs.astype(int).tolist(),
               "sign_search": {k: fs[k] for k in ("success", "sup", "threshold", "attempts")},
               "omega_hat_l2sq_times_N": exact * N, "omega_hat_l2sq_quadrature_times_N": quad * N,
               "v_of_one": tests.get("one", {}).get("v"), "v_one_bound": 3.0 * logR / math.sqrt(N),
               "v_omega_hat": abs(v_omega), "witness_identity_error": abs(v_omega - exact),
               "tests": tests, "bounds": bounds, "lower_bound": N ** (1.0 / p - 0.5)}
    config = {"N": N, "R": R, "p": p, "q_list": list(q_list), "seed": seed,
              "attempts": attempts, "test_labels": list(test_labels)}
    rows = [[label, t["v"], t["sup_m"]] for label, t in tests.items()]
    return make_report("zafran", config, results,
                       {"columns": ["multiplier", "abs_v", "sup_m"], "rows": rows})


class _OmegaHat:
    """xi -> N^{-1} sum rho_k eta(xi - k)."""

    def __init__(self, S, signs):
        self.s = dict(zip(S, signs))
        self.N = len(S)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        base = np.floor(xi).astype(int)
        out = np.zeros(xi.shape)
        for shift in (0, 1):
            k = base + shift
            w = np.clip(1.0 - np.abs(xi - k), 0.0, None)
            out += np.array([self.s.get(int(kk), 0.0) for kk in k.ravel()]).reshape(k.shape) * w
        return out / self.N


# ---------------------------------------------------------------------------
# equivalence scan

def run_equivalence(bank_labels=("one", "imagpow:1", "br:0.5"), d_list=(2.0,),
                    pqs_list=((1.2, 1.2, 1.2),), conditions=("iii", "iv"), grid=None,
                    xgrid=None, refine=True):
    """Verdicts and values of the conditions per (multiplier, d, p, q, sigma).

    ``ratio`` is the (iii)/(iv) ratio of sups and ``ratio_refined`` the same
    on the refined grids.  Truncation diagnostics are kept instead of
    raising.
    """
    grid = grid or ScaleGrid.dyadic(-3, 3)
    xgrid = xgrid or XGrid(x_max=1024.0)
    rows, entries = [], []
    for label in bank_labels:
        m = resolve_label(label)
        for d in d_list:
            for p, q, sigma in pqs_list:
                entry = {"label": label, "d": d, "p": p, "q": q, "sigma": sigma}
                reps = {}
                if "iii" in conditions:
                    reps["iii"] = condition_iii(m, d, p, q, sigma, grid=grid, xgrid=xgrid,
                                                refine=refine, strict=False)
                if "iv" in conditions:
                    reps["iv"] = condition_iv(m, d, p, q, sigma, grid=grid, xgrid=xgrid,
                                              refine=refine, strict=False)
                if "besov" in conditions:
                    reps["besov"] = besov_condition(m, d, p, q, grid=grid, xgrid=xgrid,
                                                    refine=refine, strict=False)
                if "lf" in conditions:
                    u = u_exponent(p, q)
                    if 1 <= u < 2:
                        reps["lf"] = lf_norm(m, u, default_epsilon(d, p, q),
                                             d * (1.0 / p - 1.0 / q), grid=grid, xgrid=xgrid,
                                             refine=refine, strict=False)
                for name, rep in reps.items():
                    entry[name] = {"sup": rep.sup, "verdict": rep.verdict,
                                   "refinement_ratio": rep.refinement_ratio,
                                   "refined_sup": rep.extra.get("refined_sup"),
                                   "truncation_change": rep.truncation.get("max_rel_change"),
                                   "values": rep.values}
                if "iii" in reps and "iv" in reps:
                    entry["ratio"] = reps["iii"].sup / reps["iv"].sup
                    if refine:
                        entry["ratio_refined"] = (reps["iii"].extra["refined_sup"]
                                                  / reps["iv"].extra["refined_sup"])
                    entry["verdicts_agree"] = reps["iii"].verdict == reps["iv"].verdict
                entries.append(entry)
                rows.append([label, d, p, q, sigma] + [
                    entry.get(c, {}).get("sup") for c in conditions] + [
                    entry.get(c, {}).get("verdict") for c in conditions] + [entry.get("ratio")])
    cols = ["label", "d", "p", "q", "sigma"] + [f"sup_{c}" for c in conditions] + [
        f"verdict_{c}" for c in conditions] + ["ratio_iii_iv"]
    series = {}
    for e in entries:
        for c in conditions:
            if c in e:
                key = f"{e['label']}|d={e['d']:g}|{c}"
                series[key] = {"x": grid.exponents.tolist(), "y": list(e[c]["values"])}
    config = {"bank_labels": list(bank_labels), "d_list": list(d_list),
              "pqs_list": [list(t) for t in pqs_list], "conditions": list(conditions),
              "grid": grid.to_dict(), "xgrid": xgrid.to_dict(), "refine": refine}
    return make_report("equivalence", config, {"entries": entries},
                       {"columns": cols, "rows": rows}, series)


# ---------------------------------------------------------------------------
# emission

def report_json(report):
    return json.dumps(_plain(report), sort_keys=True, indent=2) + "\n"


def report_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    table = report.get("table") or {}
    w.writerow(table.get("columns", []))
    for row in table.get("rows", []):
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def report_svg(report, width=640, height=400):
    """Minimal SVG line chart of the report's series."""
    series = report.get("series") or {}
    pad = 40
    pts = [(x, y) for s in series.values() for x, y in zip(s["x"], s["y"])
           if x is not None and y is not None]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if pts:
        xs, ys = zip(*pts)
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        sx = (width - 2 * pad) / ((x1 - x0) or 1.0)
        sy = (height - 2 * pad) / ((y1 - y0) or 1.0)
        colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
        for i, (name, s) in enumerate(sorted(series.items())):
            coords = " ".join(f"{pad + (x - x0) * sx:.2f},{height - pad - (y - y0) * sy:.2f}"
                              for x, y in zip(s["x"], s["y"]) if y is not None)
            out.append(f'<polyline fill="none" stroke="{colors[i % len(colors)]}" '
                       f'points="{coords}"><title>{name}</title></polyline>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(report, out_dir, formats=("json", "csv"), stem=None):
    """Write the report as <stem>.json / .csv / .svg; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or report.get("experiment", "report")
    writers = {"json": report_json, "csv": report_csv, "svg": report_svg}
    paths = []
    for fmt in formats:
        if fmt not in writers:
            raise InvalidArgumentError(f"unknown format {fmt!r}")
        path = out / f"{stem}.{fmt}"
        path.write_text(writers[fmt](report))
        paths.append(path)
    return paths


def load_report(path):
    return json.loads(Path(path).read_text())
