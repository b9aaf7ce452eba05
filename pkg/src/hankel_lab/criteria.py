"""Boundedness criteria as computable functionals of a multiplier.

Every criterion is a supremum over scales t of a weight t^b times a norm of
a localized piece of m.  The per-scale norms are evaluated on a sampled
grid, and each report carries:

* per-scale values (weighted) and raw norms (unweighted),
* a truncation check: every norm at x_max and at 2 x_max,
* optionally a refinement ratio and verdict.  Refinement doubles the x
  density, the x window and the scale range at once.  The verdict is
  "stable" when the sup moves by at most 10%, "growing" when it rises by
  a factor 1.5 or more, and "inconclusive" otherwise.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InconclusiveTruncation, InvalidArgumentError, PreconditionError
from .multiplier_bank import make_lp_partition
from .spaces import (
    LorentzIndex,
    WeightedMeasure,
    besov_b2aq,
    lorentz_norm,
)
from .transforms import (
    FAST_SPEC,
    QuadratureSpec,
    SampledFunction,
    cell_edges,
    hankel_eval,
    hybrid_grid,
    inv_fourier_line_eval,
    panel_rule,
    cutoff_breakpoints,
    scaled_breakpoints,
)

STABLE_TOL = 0.10
GROWTH_FACTOR = 1.5
TRUNCATION_TOL = 0.01


@dataclass(frozen=True)
class ScaleGrid:
    """Scales t = 2^{j/steps} for integer j in [j_min, j_max].

    steps=1 is the dyadic grid (closed under t -> 2t up to its ends);
    the default is quarter-dyadic on [2^-6, 2^6].
    """

    j_min: int = -24
    j_max: int = 24
    steps: int = 4

    def __post_init__(self):
        if self.j_max < self.j_min or self.steps < 1:
            raise InvalidArgumentError("empty scale grid")

    @classmethod
    def dyadic(cls, j_min=-6, j_max=6):
        return cls(j_min, j_max, 1)

    @property
    def kind(self):
        return "dyadic" if self.steps == 1 else "geometric"

    @property
    def exponents(self):
        return np.arange(self.j_min, self.j_max + 1)

    @property
    def scales(self):
        return 2.0 ** (self.exponents / self.steps)

    @property
    def t_min(self):
        return 2.0 ** (self.j_min / self.steps)

    @property
    def t_max(self):
        return 2.0 ** (self.j_max / self.steps)

    def refined(self):
        """Same step, doubled range."""
        return ScaleGrid(2 * self.j_min, 2 * self.j_max, self.steps)

    def to_dict(self):
        return {"kind": self.kind, "j_min": self.j_min, "j_max": self.j_max, "steps": self.steps}


@dataclass(frozen=True)
class XGrid:
    """Sampling of localized kernels: hybrid grid to 2*x_max (x_max is checked)."""

    x_max: float = 4096.0
    density: int = 16
    x_lin: float = 8.0
    spec: QuadratureSpec = FAST_SPEC

    def refined(self):
        return XGrid(2.0 * self.x_max, 2 * self.density, self.x_lin, self.spec)

    def nodes(self, symmetric=True):
        return hybrid_grid(2.0 * self.x_max, self.density, self.x_lin, symmetric)

    def to_dict(self):
        return {"x_max": self.x_max, "density": self.density, "x_lin": self.x_lin}


@dataclass
class CriterionReport:
    criterion: str
    scales: np.ndarray
    values: np.ndarray
    raw: np.ndarray
    sup: float
    arg_sup: float
    refinement_ratio: float = None
    verdict: str = None
    truncation: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        def clean(v):
            if isinstance(v, np.ndarray):
                return [clean(x) for x in v.tolist()]
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            if isinstance(v, dict):
                return {str(k): clean(x) for k, x in v.items()}
            if isinstance(v, (np.floating, np.integer)):
                v = v.item()
            if isinstance(v, float) and not math.isfinite(v):
                return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
            return v

        return clean({
            "criterion": self.criterion, "scales": self.scales, "values": self.values,
            "raw": self.raw, "sup": self.sup, "arg_sup": self.arg_sup,
            "refinement_ratio": self.refinement_ratio, "verdict": self.verdict,
            "truncation": self.truncation, "params": self.params, "extra": self.extra,
        })

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        def num(v):
            if isinstance(v, str):
                return float(v)
            return v

        return cls(d["criterion"], np.array([num(v) for v in d["scales"]], dtype=float),
                   np.array([num(v) for v in d["values"]], dtype=float),
                   np.array([num(v) for v in d["raw"]], dtype=float), num(d["sup"]),
                   num(d["arg_sup"]), num(d["refinement_ratio"]), d["verdict"],
                   d["truncation"], d["params"], d["extra"])


def verdict_from_ratio(ratio):
    if ratio is None or not np.isfinite(ratio):
        return "growing" if ratio is not None and ratio > 0 else None
    if abs(ratio - 1.0) <= STABLE_TOL:
        return "stable"
    if ratio >= GROWTH_FACTOR:
        return "growing"
    return "inconclusive"


def u_exponent(p, q):
    """u(p, q) with 1/u = (1/p + 1/q - 1) / (2/p - 1)."""
    if not 1 <= p < 2:
        raise PreconditionError("need 1 <= p < 2")
    return (2.0 / p - 1.0) / (1.0 / p + 1.0 / q - 1.0)


def default_epsilon(d, p, q):
    """Half the slack (d-1)(1-u/2) - d(1-u/q), divided by u."""
    u = u_exponent(p, q)
    return ((d - 1.0) * (1.0 - u / 2.0) - d * (1.0 - u / q)) / (2.0 * u)


# ---------------------------------------------------------------------------
# kernel samples

_CACHE = {}
_CACHE_MAX = 512


def _cached(key, objs, compute):
    hit = _CACHE.get(key)
    if hit is not None:
        return hit[1]
    val = compute()
    if len(_CACHE) >= _CACHE_MAX:
        _CACHE.clear()
    # keep the keyed objects alive so their ids are not reused
    _CACHE[key] = (objs, val)
    return val


def clear_cache():
    _CACHE.clear()


def _piece(m, phi, t):
    lo, hi = phi.support
    bps = cutoff_breakpoints(m, phi, t)

    def g(xi):
        return phi(xi) * m(t * xi)

    return g, (lo, hi), bps


def _is_zero_piece(m, phi, t):
    lo, hi = phi.support
    return m.support[1] < t * lo or m.support[0] > t * hi


def line_kernel(m, phi, t, xgrid):
    """k_t = F^{-1}[phi m(t .)] on the symmetric sampling grid (cached)."""
    x = xgrid.nodes(True)

    def compute():
        if _is_zero_piece(m, phi, t):
            return np.zeros(x.shape, dtype=complex)
        g, sup, bps = _piece(m, phi, t)
        return inv_fourier_line_eval(g, x, sup, xgrid.spec, bps)[0]

    key = ("line", id(m), id(phi), float(t), xgrid)
    return x, _cached(key, (m, phi), compute)


def bessel_piece(m, phi, t, d, xgrid):
    """B_d[phi m(t .)] on the half-line sampling grid (cached)."""
    r = xgrid.nodes(False)

    def compute():
        if _is_zero_piece(m, phi, t):
            return np.zeros(r.shape)
        g, sup, bps = _piece(m, phi, t)
        return hankel_eval(d, g, r, xgrid.spec, support=sup, breakpoints=bps)

    key = ("bessel", id(m), id(phi), float(t), float(d), xgrid)
    return r, _cached(key, (m, phi), compute)


# ---------------------------------------------------------------------------
# scan engine

def _window(x, x_max):
    return np.abs(x) <= x_max * (1 + 1e-12)


def _scan(name, m, grid, xgrid, weight_exp, per_scale, params, strict=True):
    """per_scale(t, x_max) -> raw norm; evaluated at x_max and 2 x_max."""
    scales = grid.scales
    raw = np.zeros(scales.size)
    raw_short = np.zeros(scales.size)
    for i, t in enumerate(scales):
        raw[i] = per_scale(t, 2.0 * xgrid.x_max)
        raw_short[i] = per_scale(t, xgrid.x_max)
    weights = scales ** weight_exp
    values = weights * raw
    i_sup = int(np.argmax(values)) if values.size else 0
    sup = float(values[i_sup]) if values.size else 0.0
    significant = values > 1e-6 * sup if sup > 0 else np.zeros(values.shape, bool)
    rel = np.zeros(scales.size)
    rel[significant] = np.abs(raw[significant] - raw_short[significant]) / raw[significant]
    worst = float(rel.max(initial=0.0))
    trunc = {"x_max": xgrid.x_max, "values_at_x_max": weights * raw_short,
             "values_at_2x_max": values, "max_rel_change": worst}
    report = CriterionReport(name, scales, values, raw, sup, float(scales[i_sup]),
                             truncation=trunc, params=params)
    if strict and worst > TRUNCATION_TOL:
        err = InconclusiveTruncation(
            f"{name}: doubling the x window changed a norm by {worst:.3g}", achieved=worst)
        err.report = report
        raise err
    return report


def _with_refinement(fn, grid, xgrid, refine, **kw):
    base = fn(grid=grid, xgrid=xgrid, **kw)
    if refine:
        fine = fn(grid=grid.refined(), xgrid=xgrid.refined(), **kw)
        ratio = fine.sup / base.sup if base.sup > 0 else (1.0 if fine.sup == 0 else math.inf)
        base.refinement_ratio = float(ratio)
        base.verdict = verdict_from_ratio(ratio)
        base.extra["refined_sup"] = fine.sup
        base.extra["refined_values"] = fine.values
    return base


def _defaults(grid, xgrid, phi):
    return (grid or ScaleGrid(), xgrid or XGrid(), phi or make_lp_partition().phi)


def _check_pq(d, p, q):
    if not d > 1:
        raise PreconditionError("need d > 1")
    if not 1 < p <= q:
        raise PreconditionError("need 1 < p <= q")


# ---------------------------------------------------------------------------
# conditions on the line kernels

def _iv_norm(m, phi, d, q, sigma, xgrid):
    nu = WeightedMeasure.line_weight(d - 1.0)
    idx = LorentzIndex(q, sigma)

    def per_scale(t, x_max):
        x, k = line_kernel(m, phi, t, xgrid)
        w = _window(x, x_max)
        xs = x[w]
        F = (1.0 + np.abs(xs)) ** (-(d - 1.0) / 2.0) * np.abs(k[w])
        return lorentz_norm((F, nu.cells(xs)), nu, idx)

    return per_scale


def _condition_iv(m, d, p, q, sigma, phi, grid, xgrid, name, strict):
    return _scan(name, m, grid, xgrid, d * (1.0 / p - 1.0 / q),
                 _iv_norm(m, phi, d, q, sigma, xgrid),
                 {"d": d, "p": p, "q": q, "sigma": sigma, "grid": grid.to_dict(),
                  "xgrid": xgrid.to_dict(), "multiplier": getattr(m, "label", "")}, strict)


def condition_iv(m, d, p, q, sigma, phi=None, grid=None, xgrid=None, refine=False, strict=True):
    """sup_t t^{d(1/p-1/q)} ||(1+|x|)^{-(d-1)/2} k_t||_{L^{q,sigma}(nu_{d-1})}."""
    _check_pq(d, p, q)
    grid, xgrid, phi = _defaults(grid, xgrid, phi)
    return _with_refinement(
        lambda grid, xgrid: _condition_iv(m, d, p, q, sigma, phi, grid, xgrid, "condition_iv",
                                          strict), grid, xgrid, refine)


def a_j(m, d, q, sigma, j, xgrid=None):
    """A_j = ||(1+|x|)^{-(d-1)/2} kappa_j||_{L^{q,sigma}(nu_{d-1})} at kappa_j's scale 2^j."""
    xgrid = xgrid or XGrid()
    per = _iv_norm(m, make_lp_partition().phi, d, q, sigma, xgrid)
    return per(2.0 ** j, 2.0 * xgrid.x_max)


def a_const(m, d, p, q, sigma, grid=None, xgrid=None, refine=False, strict=True):
    """A = sup_j 2^{jd(1/p-1/q)} A_j over a dyadic grid with the partition phi."""
    _check_pq(d, p, q)
    grid = grid or ScaleGrid.dyadic()
    if grid.steps != 1:
        raise InvalidArgumentError("A is defined on a dyadic grid")
    xgrid = xgrid or XGrid()
    phi = make_lp_partition().phi
    return _with_refinement(
        lambda grid, xgrid: _condition_iv(m, d, p, q, sigma, phi, grid, xgrid, "a_const",
                                          strict), grid, xgrid, refine)


def lqmud_direct(m, d, p, q, phi=None, grid=None, xgrid=None, strict=True):
    """sup_t t^{d(1/p-1/q)} (int |k_t|^q (1+|x|)^{(d-1)(1-q/2)} dx)^{1/q}.

    The integral is discretized on the same cells as the Lorentz route,
    each cell carrying its exact weight mass nu_{d-1}(cell)/(1+|x_i|)^{d-1}
    times the pointwise weight, so the two routes agree to rounding.
    """
    _check_pq(d, p, q)
    grid, xgrid, phi = _defaults(grid, xgrid, phi)
    nu = WeightedMeasure.line_weight(d - 1.0)

    def per_scale(t, x_max):
        x, k = line_kernel(m, phi, t, xgrid)
        w = _window(x, x_max)
        xs = x[w]
        omega = nu.cells(xs) / (1.0 + np.abs(xs)) ** (d - 1.0)
        weight = (1.0 + np.abs(xs)) ** ((d - 1.0) * (1.0 - q / 2.0))
        return float(np.sum(np.abs(k[w]) ** q * weight * omega)) ** (1.0 / q)

    return _scan("lqmud_direct", m, grid, xgrid, d * (1.0 / p - 1.0 / q), per_scale,
                 {"d": d, "p": p, "q": q, "grid": grid.to_dict(), "xgrid": xgrid.to_dict()},
                 strict)


def _line_lp(x, k, a, p, x_max):
    w = _window(x, x_max)
    xs = x[w]
    lengths = np.diff(cell_edges(xs))
    return float(np.sum((np.abs(k[w]) * (1.0 + np.abs(xs)) ** a) ** p * lengths)) ** (1.0 / p)


def lf_norm(m, p, a, b, phi=None, grid=None, xgrid=None, refine=False, strict=True):
    """sup_t t^b (int |F^{-1}[phi m(t .)]|^p (1+|x|)^{ap} dx)^{1/p}."""
    if a < 0:
        raise PreconditionError("need a >= 0")
    if not 1 <= p <= 2:
        raise PreconditionError("need 1 <= p <= 2")
    grid, xgrid, phi = _defaults(grid, xgrid, phi)

    def run(grid, xgrid):
        def per_scale(t, x_max):
            x, k = line_kernel(m, phi, t, xgrid)
            return _line_lp(x, k, a, p, x_max)

        return _scan("lf_norm", m, grid, xgrid, b, per_scale,
                     {"p": p, "a": a, "b": b, "grid": grid.to_dict(), "xgrid": xgrid.to_dict()},
                     strict)

    return _with_refinement(run, grid, xgrid, refine)


def b_j(m, eps, u, j, xgrid=None):
    """B_j(eps, u) = ||kappa_j||_{L^u((1+|x|)^{u eps} dx)}."""
    if not 1 <= u < 2 or eps < 0:
        raise PreconditionError("need 1 <= u < 2 and eps >= 0")
    xgrid = xgrid or XGrid()
    x, k = line_kernel(m, make_lp_partition().phi, 2.0 ** j, xgrid)
    return _line_lp(x, k, eps, u, 2.0 * xgrid.x_max)


def b_const(m, eps, p, q, d=2.0, grid=None, xgrid=None, refine=False, strict=True):
    """B = sup_j 2^{jd(1/p-1/q)} B_j(eps, u(p, q)); eps=None picks the default."""
    _check_pq(d, p, q)
    u = u_exponent(p, q)
    if eps is None:
        eps = default_epsilon(d, p, q)
    if not 1 <= u < 2 or eps < 0:
        raise PreconditionError("need 1 <= u < 2 and eps >= 0")
    grid = grid or ScaleGrid.dyadic()
    xgrid = xgrid or XGrid()
    phi = make_lp_partition().phi

    def run(grid, xgrid):
        def per_scale(t, x_max):
            x, k = line_kernel(m, phi, t, xgrid)
            return _line_lp(x, k, eps, u, x_max)

        return _scan("b_const", m, grid, xgrid, d * (1.0 / p - 1.0 / q), per_scale,
                     {"d": d, "p": p, "q": q, "u": u, "eps": eps, "grid": grid.to_dict(),
                      "xgrid": xgrid.to_dict()}, strict)

    return _with_refinement(run, grid, xgrid, refine)


def besov_condition(m, d, p, q, phi=None, grid=None, xgrid=None, refine=False, strict=True):
    """sup_t t^{d(1/p-1/q)} ||phi m(t .)||_{B^2_{a,q}}, a = d(1/q - 1/2).

    The transform of phi m(t .) is 2 pi k_t(-xi), taken from the shared
    kernel samples; annuli are integrated cell by cell.
    """
    _check_pq(d, p, q)
    grid, xgrid, phi = _defaults(grid, xgrid, phi)
    a = d * (1.0 / q - 0.5)

    def run(grid, xgrid):
        def per_scale(t, x_max):
            x, k = line_kernel(m, phi, t, xgrid)
            w = _window(x, x_max)
            xi = -x[w][::-1]
            ghat = SampledFunction(xi, 2.0 * math.pi * k[w][::-1], "line")
            return besov_b2aq(ghat=ghat, a=a, q=q, k_max=64)

        return _scan("besov_condition", m, grid, xgrid, d * (1.0 / p - 1.0 / q), per_scale,
                     {"d": d, "p": p, "q": q, "a": a, "grid": grid.to_dict(),
                      "xgrid": xgrid.to_dict()}, strict)

    return _with_refinement(run, grid, xgrid, refine)


# ---------------------------------------------------------------------------
# condition (iii): the Fourier-Bessel side

def condition_iii(m, d, p, q, sigma, phi=None, grid=None, xgrid=None, refine=False, strict=True):
    """sup_t t^{d(1/p-1/q)} ||B_d[phi m(t .)]||_{L^{q,sigma}(mu_d)}."""
    _check_pq(d, p, q)
    grid, xgrid, phi = _defaults(grid, xgrid, phi)
    mu = WeightedMeasure.radial_power(d)
    idx = LorentzIndex(q, sigma)

    def run(grid, xgrid):
        def per_scale(t, x_max):
            r, v = bessel_piece(m, phi, t, d, xgrid)
            w = r <= x_max * (1 + 1e-12)
            return lorentz_norm((np.abs(v[w]), mu.cells(r[w])), mu, idx)

        return _scan("condition_iii", m, grid, xgrid, d * (1.0 / p - 1.0 / q), per_scale,
                     {"d": d, "p": p, "q": q, "sigma": sigma, "grid": grid.to_dict(),
                      "xgrid": xgrid.to_dict(), "multiplier": getattr(m, "label", "")},
                     strict)

    return _with_refinement(run, grid, xgrid, refine)


# ---------------------------------------------------------------------------
# the L^p -> L^2 criterion

_LP2_SPEC = QuadratureSpec(nodes=16, panels_per_oscillation=8.0, estimate_error=False,
                           max_width=0.25)


def _block_l2(m, lo, hi, measure):
    bps = [b for b in m.breakpoints if lo < b < hi]
    if m.support[1] <= lo or m.support[0] >= hi:
        return 0.0
    a, b = max(lo, m.support[0]), min(hi, m.support[1])
    bps = [x for x in bps if a < x < b]
    rho, w = panel_rule(a, b, 1.0, _LP2_SPEC, bps, singular=False)
    return float(np.sum(np.abs(m(rho)) ** 2 * measure(rho) * w))


def lp2_condition(m, d, p, grid=None, refine=True, phi=None):
    """sup_t t^{d(1/p-1/2)} (int_t^{2t} |m|^2 drho/rho)^{1/2}.

    ``extra["phi_form"]`` holds the cross-check
    sup_t t^{d(1/p-1/2)} ||phi m(t .)||_{L^2(dxi)} and ``extra["phi_ratio"]``
    the ratio of the two sups.
    """
    if not d > 1:
        raise PreconditionError("need d > 1")
    if not 1 < p <= 2.0 * d / (d + 1.0) + 1e-12:
        raise PreconditionError("need 1 < p <= 2d/(d+1)")
    grid = grid or ScaleGrid()
    phi = phi or make_lp_partition().phi
    e = d * (1.0 / p - 0.5)

    def run(grid):
        scales = grid.scales
        raw = np.array([math.sqrt(_block_l2(m, t, 2.0 * t, lambda r: 1.0 / r)) for t in scales])
        alt = []
        for t in scales:
            lo, hi = phi.support
            g_lo, g_hi = max(lo, m.support[0] / t), min(hi, m.support[1] / t)
            if g_lo >= g_hi:
                alt.append(0.0)
                continue
            bps = list(scaled_breakpoints(m, t, g_lo, g_hi))
            xi, w = panel_rule(g_lo, g_hi, 1.0, _LP2_SPEC, bps, singular=False)
            alt.append(math.sqrt(float(np.sum(np.abs(phi(xi) * m(t * xi)) ** 2 * w))))
        alt = np.array(alt)
        values = scales ** e * raw
        i = int(np.argmax(values))
        alt_sup = float(np.max(scales ** e * alt))
        rep = CriterionReport("lp2_condition", scales, values, raw, float(values[i]),
                              float(scales[i]), params={"d": d, "p": p, "grid": grid.to_dict()})
        rep.extra["phi_form"] = alt_sup
        rep.extra["phi_ratio"] = rep.sup / alt_sup if alt_sup > 0 else None
        return rep

    base = run(grid)
    if refine:
        fine = run(grid.refined())
        ratio = fine.sup / base.sup if base.sup > 0 else 1.0
        base.refinement_ratio = float(ratio)
        base.verdict = verdict_from_ratio(ratio)
    return base
