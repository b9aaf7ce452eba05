"""Lebesgue, Lorentz and Besov norms over power-weight measures.

A sampled function is read as a step function: the value at each node is
held on the cell between the midpoints to its neighbours.  Cell masses are
computed in closed form for both measure families, so the rearrangement of
the step function, and every norm derived from it, is exact for that step
function.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyInputError,
    InvalidArgumentError,
    OutOfDomainError,
    PreconditionError,
    UnsupportedInputError,
)
from .transforms import (
    FAST_SPEC,
    SampledFunction,
    cell_edges,
    fourier_line,
    panel_rule,
)


class NotRearrangeableError(PreconditionError):
    """A positive level set has infinite measure."""


@dataclass(frozen=True)
class WeightedMeasure:
    """Power-weight measure.

    ``radial_power(d)`` is r^{d-1} dr on the half-line and
    ``line_weight(alpha)`` is (1+|x|)^alpha dx on the line.
    """

    kind: str
    param: float

    def __post_init__(self):
        if self.kind == "radial_power" and not self.param > 0:
            raise InvalidArgumentError("d must be positive")
        if self.kind == "line_weight" and not self.param >= 0:
            raise InvalidArgumentError("alpha must be non-negative")
        if self.kind not in ("radial_power", "line_weight"):
            raise InvalidArgumentError(f"unknown measure kind {self.kind!r}")

    @classmethod
    def radial_power(cls, d):
        return cls("radial_power", float(d))

    @classmethod
    def line_weight(cls, alpha):
        return cls("line_weight", float(alpha))

    @property
    def domain(self):
        return "half_line" if self.kind == "radial_power" else "line"

    def primitive(self, x):
        """Antiderivative P with measure([a, b]) = P(b) - P(a)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "radial_power":
            if np.any(x < 0):
                raise OutOfDomainError("radial measure lives on [0, inf)")
            return x ** self.param / self.param
        a1 = self.param + 1.0
        return np.sign(x) * np.expm1(a1 * np.log1p(np.abs(x))) / a1

    def interval(self, a, b):
        return self.primitive(b) - self.primitive(a)

    def cells(self, grid):
        """Masses of the cells around each grid node."""
        lower = 0.0 if self.kind == "radial_power" else None
        edges = cell_edges(grid, lower=lower)
        return np.diff(self.primitive(edges))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "radial_power":
            return x ** (self.param - 1.0)
        return (1.0 + np.abs(x)) ** self.param

    def describe(self):
        name = "mu_d" if self.kind == "radial_power" else "nu_alpha"
        return f"{name}({self.param:g})"


LEBESGUE_HALF_LINE = WeightedMeasure.radial_power(1.0)
LEBESGUE_LINE = WeightedMeasure.line_weight(0.0)


@dataclass(frozen=True)
class LorentzIndex:
    """Exponents (q, sigma) of L^{q,sigma}; sigma may be inf."""

    q: float
    sigma: float

    def __post_init__(self):
        if not 1.0 < self.q < math.inf:
            raise InvalidArgumentError("Lorentz q must lie in (1, inf)")
        if not self.sigma >= 1.0:
            raise InvalidArgumentError("Lorentz sigma must be >= 1")

    @property
    def omega(self):
        return min(self.sigma, self.q)


@dataclass
class Rearrangement:
    """Non-increasing step function f*: level ``levels[i]`` on
    [breakpoints[i-1], breakpoints[i]) with breakpoints[-1] := 0."""

    breakpoints: np.ndarray
    levels: np.ndarray
    step_masses: np.ndarray = None

    @property
    def total_measure(self):
        return float(self.breakpoints[-1]) if self.breakpoints.size else 0.0

    def masses(self):
        if self.step_masses is not None:
            return self.step_masses
        return np.diff(np.concatenate([[0.0], self.breakpoints]))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        i = np.searchsorted(self.breakpoints, t, side="right")
        padded = np.concatenate([self.levels, [0.0]])
        return padded[i]

    def distribution(self, lam):
        """mu({|f| > lam})."""
        i = np.searchsorted(-self.levels, -lam, side="left")
        return float(self.breakpoints[i - 1]) if i > 0 else 0.0


def _as_cells(f, mu):
    """(|values|, cell masses) of a step function."""
    if isinstance(f, SampledFunction):
        return np.abs(f.values), mu.cells(f.grid)
    vals, masses = f
    return np.abs(np.asarray(vals)), np.asarray(masses, dtype=float)


def rearrange_cells(values, masses):
    """Rearrangement of a step function given per-cell values and masses."""
    vals = np.abs(np.asarray(values)).ravel()
    masses = np.asarray(masses, dtype=float).ravel()
    if vals.shape != masses.shape:
        raise InvalidArgumentError("values and masses differ in shape")
    keep = vals > 0
    if np.any(~np.isfinite(masses[keep])):
        raise NotRearrangeableError("positive level on a set of infinite measure")
    vals, masses = vals[keep], masses[keep]
    order = np.argsort(-vals, kind="stable")
    m = masses[order]
    return Rearrangement(np.cumsum(m), vals[order], m)


def decreasing_rearrangement(f, mu):
    """Decreasing rearrangement of the step interpretation of ``f``.

    Parameters
    ----------
    f : SampledFunction or (values, masses)
    mu : WeightedMeasure
    """
    vals, masses = _as_cells(f, mu)
    return rearrange_cells(vals, masses)


def _power_increments(t, s, dt=None):
    """t_i^s - t_{i-1}^s (t_{-1} = 0) without cancellation."""
    prev = np.concatenate([[0.0], t[:-1]])
    if dt is None:
        dt = t - prev
    if s == 1.0:
        return dt
    out = np.empty_like(t)
    z = prev == 0
    out[z] = t[z] ** s
    nz = ~z
    out[nz] = prev[nz] ** s * np.expm1(s * np.log1p(dt[nz] / prev[nz]))
    return out


def lorentz_from_rearrangement(rear, idx):
    """(int_0^inf (t^{1/q} f*(t))^sigma dt/t)^{1/sigma}, exact for steps."""
    q, sigma = idx.q, idx.sigma
    if rear.levels.size == 0:
        return 0.0
    t, lam = rear.breakpoints, rear.levels
    if math.isinf(sigma):
        return float(np.max(lam * t ** (1.0 / q)))
    s = sigma / q
    inc = _power_increments(t, s, rear.masses())
    # factor levels out to avoid overflow when sigma is large
    top = lam[0]
    total = np.sum((lam / top) ** sigma * inc) / s
    return float(top * total ** (1.0 / sigma))


def lorentz_norm(f, mu, idx):
    """Lorentz L^{q,sigma}(mu) norm via the decreasing rearrangement."""
    return lorentz_from_rearrangement(decreasing_rearrangement(f, mu), idx)


def lebesgue_norm(f, mu, q):
    """L^q(mu) norm of the step interpretation (q may be inf)."""
    vals, masses = _as_cells(f, mu)
    if math.isinf(q):
        sel = masses > 0
        return float(np.max(vals[sel], initial=0.0))
    top = float(np.max(vals, initial=0.0))
    if top == 0:
        return 0.0
    return float(top * np.sum((vals / top) ** q * masses) ** (1.0 / q))


def dyadic_quasinorm(f, mu, idx):
    """Distribution-function quasinorm over dyadic levels.

    sum_l 2^{l sigma} mu(|f| > 2^l)^{sigma/q}, including the closed-form
    geometric tail for all levels below min |f| (where the distribution
    function equals the total support measure).
    """
    rear = decreasing_rearrangement(f, mu)
    if rear.levels.size == 0:
        return 0.0
    q, sigma = idx.q, idx.sigma
    lo = math.floor(math.log2(rear.levels[-1]))
    hi = math.ceil(math.log2(rear.levels[0]))
    ells = np.arange(lo, hi + 1)
    dist = np.array([rear.distribution(2.0 ** l) for l in ells])
    total = rear.total_measure
    if math.isinf(sigma):
        # below lo the distribution is the total mass and 2^l only shrinks
        return float(max(np.max(2.0 ** ells * dist ** (1.0 / q)),
                         2.0 ** (lo - 1) * total ** (1.0 / q)))
    body = np.sum(2.0 ** (ells * sigma) * dist ** (sigma / q))
    r = 2.0 ** (-sigma)
    tail = 2.0 ** (lo * sigma) * r / (1.0 - r) * total ** (sigma / q)
    return float((body + tail) ** (1.0 / sigma))


# ---------------------------------------------------------------------------
# Besov

@dataclass
class BesovResult:
    value: float
    terms: np.ndarray
    tail: float
    k_max: int


def _annulus_l2(ghat, k, freq, spec):
    """||ghat||_{L^2(I_k)}, I_0 = [-1, 1], I_k = {2^{k-1} <= |xi| <= 2^k}."""
    if k == 0:
        pieces = [(-1.0, 1.0)]
    else:
        lo, hi = 2.0 ** (k - 1), 2.0 ** k
        pieces = [(-hi, -lo), (lo, hi)]
    total = 0.0
    for a, b in pieces:
        xi, w = panel_rule(a, b, freq, spec)
        total += float(np.sum(np.abs(ghat(xi)) ** 2 * w))
    return math.sqrt(total)


def _annulus_l2_samples(sf, k):
    """Annulus L^2 norm of a sampled transform read as a step function."""
    edges = cell_edges(sf.grid)
    v2 = np.abs(sf.values) ** 2
    if k == 0:
        pieces = [(-1.0, 1.0)]
    else:
        lo, hi = 2.0 ** (k - 1), 2.0 ** k
        pieces = [(-hi, -lo), (lo, hi)]
    total = 0.0
    for a, b in pieces:
        overlap = np.clip(np.minimum(edges[1:], b) - np.maximum(edges[:-1], a), 0.0, None)
        total += float(np.sum(v2 * overlap))
    return math.sqrt(total)


def besov_b2aq(g=None, a=0.0, q=2.0, support=None, breakpoints=(), ghat=None,
               k_max=10, tol=1e-10, spec=None, detail=False, ghat_freq=1.0):
    """Besov B^2_{a,q} norm (sum_k 2^{kaq} ||g^||_{L^2(I_k)}^q)^{1/q}.

    Give either a compactly supported ``g`` on the line (callable with
    ``support``, or a SampledFunction) whose transform is computed by
    quadrature, or the transform directly as ``ghat``: a callable, or a
    SampledFunction read as a step function on its grid (annuli beyond the
    grid are then treated as empty, so ``k_max`` is capped by the grid).  The k-sum stops
    once a term adds less than ``tol`` relatively; if ``k_max`` is reached
    first the remaining tail is extrapolated from the ratio of the last two
    terms (reported as ``tail`` with ``detail=True``).  ``ghat_freq`` sizes
    the panels for a user-supplied ``ghat`` (its oscillation frequency).
    """
    if q < 1:
        raise InvalidArgumentError("q must be >= 1")
    spec = spec or FAST_SPEC
    sampled = isinstance(ghat, SampledFunction)
    if sampled:
        top = float(np.max(np.abs(ghat.grid)))
        k_max = min(k_max, max(0, int(math.floor(math.log2(top)))))
    if ghat is None:
        if g is None:
            raise InvalidArgumentError("need g or ghat")
        if support is None and isinstance(g, SampledFunction):
            support = g.support
            breakpoints = tuple(breakpoints) + g.breakpoints
        if support is None or not all(np.isfinite(support)):
            raise UnsupportedInputError("g must have declared compact support")
        lo, hi = float(support[0]), float(support[1])
        width = max(abs(lo), abs(hi))

        def ghat(xi):
            return fourier_line(g, xi, support=(lo, hi), spec=spec.without_estimate(),
                                breakpoints=breakpoints).values

        freq = width
    else:
        freq = ghat_freq
    terms = []
    acc = 0.0
    tail = 0.0
    for k in range(k_max + 1):
        if sampled:
            t = 2.0 ** (k * a * q) * _annulus_l2_samples(ghat, k) ** q
        else:
            t = 2.0 ** (k * a * q) * _annulus_l2(ghat, k, freq, spec) ** q
        terms.append(t)
        acc += t
        if k >= 2 and acc > 0 and t < tol * acc and terms[-2] < tol * acc:
            break
    else:
        # sampled transforms carry their own truncation check upstream
        if not sampled and len(terms) >= 2 and terms[-2] > 0:
            r = terms[-1] / terms[-2]
            tail = terms[-1] * r / (1.0 - r) if r < 1 else math.inf
    value = (acc + tail) ** (1.0 / q)
    if detail:
        return BesovResult(value, np.array(terms), tail, len(terms) - 1)
    return value


# ---------------------------------------------------------------------------
# weighted convolution and dilation checks

def _lq_weighted(vals, x, h, a, q):
    w = (1.0 + np.abs(x)) ** a
    if math.isinf(q):
        return float(np.max(np.abs(vals) * w))
    return float(np.sum((np.abs(vals) * w) ** q) * h) ** (1.0 / q)


def weighted_conv_bound_check(g, zeta, gamma, a=None, q=None, q1=None, alpha=None, beta=None,
                              sigma=None, t=2.0, x_max=64.0, h=1.0 / 32):
    """Both sides of the weighted convolution and dilation inequalities.

    Two parameter families are supported:

    * weighted L^q: ``a >= 0``, ``q1 >= q >= 1`` and ``gamma > a + 1``;
      compares ||(g*zeta)(1+|x|)^a||_{q1} with ||g (1+|x|)^a||_q.
    * Lorentz: ``alpha > beta q >= 0``, ``sigma`` and
      ``gamma > 1 - beta + alpha/q``; compares
      ||(g*zeta)/(1+|x|)^beta||_{L^{q,sigma}(nu_alpha)} with the same for g.

    ``zeta`` must satisfy |zeta(x)| <= C (1+|x|)^{-gamma}.  The dilation
    check compares g(t .) with g, its right side including the factor
    t^{-1/q} max{1, t^{-e}} (e = a, or alpha/q - beta).

    Returns
    -------
    dict with conv_lhs, conv_rhs, conv_ratio, dil_lhs, dil_rhs, dil_ratio.
    """
    lorentz = alpha is not None
    if lorentz:
        if q is None or beta is None or sigma is None:
            raise InvalidArgumentError("Lorentz mode needs alpha, beta, q, sigma")
        if not alpha > beta * q >= 0:
            raise PreconditionError("need alpha > beta*q >= 0")
        if not gamma > 1 - beta + alpha / q:
            raise PreconditionError("need gamma > 1 - beta + alpha/q")
        idx = LorentzIndex(q, sigma)
    else:
        if a is None or q is None:
            raise InvalidArgumentError("L^q mode needs a and q")
        q1 = q if q1 is None else q1
        if a < 0 or not q1 >= q >= 1:
            raise PreconditionError("need a >= 0 and q1 >= q >= 1")
        if not gamma > a + 1:
            raise PreconditionError("need gamma > a + 1")
    if not t > 0:
        raise InvalidArgumentError("dilation t must be positive")
    n = int(round(x_max / h))
    x = h * np.arange(-n, n + 1)
    gx = np.asarray(g(x), dtype=complex)
    zx = np.asarray(zeta(x), dtype=complex)
    conv = np.convolve(gx, zx, mode="same") * h
    gt = np.asarray(g(t * x), dtype=complex)
    if lorentz:
        nu = WeightedMeasure.line_weight(alpha)
        masses = nu.cells(x)
        damp = (1.0 + np.abs(x)) ** (-beta)

        def norm(v):
            return lorentz_norm((v * damp, masses), nu, idx)

        conv_lhs, conv_rhs = norm(conv), norm(gx)
        dil_lhs = norm(gt)
        e = alpha / q - beta
        dil_rhs = t ** (-1.0 / q) * max(1.0, t ** (-e)) * conv_rhs
    else:
        conv_lhs = _lq_weighted(conv, x, h, a, q1)
        conv_rhs = _lq_weighted(gx, x, h, a, q)
        dil_lhs = _lq_weighted(gt, x, h, a, q)
        dil_rhs = t ** (-1.0 / q) * max(1.0, t ** (-a)) * conv_rhs
    return {
        "conv_lhs": conv_lhs,
        "conv_rhs": conv_rhs,
        "conv_ratio": conv_lhs / conv_rhs if conv_rhs > 0 else math.inf,
        "dil_lhs": dil_lhs,
        "dil_rhs": dil_rhs,
        "dil_ratio": dil_lhs / dil_rhs if dil_rhs > 0 else math.inf,
        "norm_g": conv_rhs,
    }


# ---------------------------------------------------------------------------
# reports

@dataclass
class NormReport:
    norm_kind: str
    measure: str
    q: float
    sigma: float
    value: float
    refinement_ratio: float = None

    def to_json(self):
        d = {k: (None if isinstance(v, float) and math.isinf(v) else v)
             for k, v in self.__dict__.items()}
        if math.isinf(self.sigma):
            d["sigma"] = "inf"
        return json.dumps(d, sort_keys=True)


def norm_report(f, mu, q, sigma=None, kind="lorentz", refined=None):
    """Evaluate a norm, optionally against a refined sample of the same f."""
    if f is None:
        raise EmptyInputError("no function given")
    sigma = q if sigma is None else sigma

    def ev(func):
        if kind == "lorentz":
            return lorentz_norm(func, mu, LorentzIndex(q, sigma))
        if kind == "lebesgue":
            return lebesgue_norm(func, mu, q)
        if kind == "dyadic":
            return dyadic_quasinorm(func, mu, LorentzIndex(q, sigma))
        raise InvalidArgumentError(f"unknown norm kind {kind!r}")

    value = ev(f)
    ratio = None
    if refined is not None and value > 0:
        ratio = ev(refined) / value
    return NormReport(kind, mu.describe(), q, sigma, value, ratio)
