"""Named multipliers, the Littlewood-Paley partition and the retract maps.

Every multiplier is a :class:`Multiplier`: a callable that is exactly zero
outside its declared support, with its non-smooth points listed so the
quadrature can align panels to them.
"""

import math
from fractions import Fraction

import numpy as np

from .errors import EmptyInputError, InvalidArgumentError, LabelLookupError
from .transforms import (
    FAST_SPEC,
    SampledFunction,
    localized_kernel,
    trapezoid_weights,
    uniform_grid,
)


class Multiplier:
    """Scalar multiplier rho -> complex with support and smoothness metadata.

    Parameters
    ----------
    func : callable
        Evaluated only on the support (closed interval).
    support : (lo, hi)
        May be infinite at either end.
    breakpoints : sequence of float
        Jump points or points of reduced smoothness.
    smooth : bool
        False for piecewise-smooth multipliers.
    label : str
    """

    def __init__(self, func, support=(0.0, math.inf), breakpoints=(), smooth=True, label=""):
        lo, hi = float(support[0]), float(support[1])
        if not lo < hi:
            raise InvalidArgumentError("empty support")
        self.func = func
        self.support = (lo, hi)
        self.breakpoints = tuple(sorted(float(b) for b in breakpoints))
        self.smooth = smooth
        self.label = label

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        out = np.zeros(rho.shape, dtype=complex)
        inside = (rho >= self.support[0]) & (rho <= self.support[1])
        if np.any(inside):
            out[inside] = self.func(rho[inside])
        return out

    def dilate(self, s):
        """The multiplier rho -> m(s rho)."""
        if not s > 0:
            raise InvalidArgumentError("dilation must be positive")
        f = self.func
        return Multiplier(lambda r: f(s * r), (self.support[0] / s, self.support[1] / s),
                          [b / s for b in self.breakpoints], self.smooth,
                          f"{self.label}(x{s:g})" if self.label else "")

    def __repr__(self):
        return f"Multiplier({self.label!r}, support={self.support})"


def _sum(label, parts):
    lo = min(p.support[0] for p in parts)
    hi = max(p.support[1] for p in parts)
    bps = sorted({b for p in parts for b in p.breakpoints})
    return Multiplier(lambda r: sum(p(r) for p in parts), (lo, hi), bps,
                      all(p.smooth for p in parts), label)


# ---------------------------------------------------------------------------
# Littlewood-Paley partition

def psi_bump(s):
    """exp(-1/((s-1/2)(2-s))) on (1/2, 2), zero elsewhere."""
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape)
    inside = (s > 0.5) & (s < 2.0)
    t = s[inside]
    out[inside] = np.exp(-1.0 / ((t - 0.5) * (2.0 - t)))
    return out


def _lp_phi(s):
    s = np.asarray(s, dtype=float)
    num = psi_bump(s)
    # only j in {-1, 0, 1} can be active on (1/2, 2)
    den = psi_bump(0.5 * s) + num + psi_bump(2.0 * s)
    out = np.zeros(s.shape)
    pos = num > 0
    out[pos] = np.sqrt(num[pos] / den[pos])
    return out


def _lp_eta(s):
    s = np.asarray(s, dtype=float)
    out = _lp_phi(2.0 * s) ** 2 + _lp_phi(s) ** 2 + _lp_phi(0.5 * s) ** 2
    # the three squares sum to one on [1/2, 2]; pin it so eta*phi == phi exactly
    out[(s >= 0.5) & (s <= 2.0)] = 1.0
    return out


class LPPartition:
    """phi with sum_j phi^2(2^{-j} s) = 1 and companion eta = 1 on supp phi."""

    def __init__(self):
        # psi(2s) and psi(s/2) switch off at s = 1 like exp(-c/|1-s|): a flat,
        # non-analytic point that quadrature must treat as a breakpoint
        self.phi = Multiplier(_lp_phi, (0.5, 2.0), breakpoints=(1.0,), label="phi")
        self.eta = Multiplier(_lp_eta, (0.25, 4.0), breakpoints=(0.5, 1.0, 2.0), label="eta")

    def partition_sum(self, s, j_range=None):
        """sum_j phi^2(2^{-j} s); by default j covers every active term."""
        s = np.asarray(s, dtype=float)
        if j_range is None:
            lo = int(math.floor(math.log2(max(float(np.min(s)), 1e-300)))) - 2
            hi = int(math.ceil(math.log2(max(float(np.max(s)), 1e-300)))) + 2
            j_range = range(lo, hi + 1)
        return sum(np.abs(self.phi(2.0 ** (-j) * s)) ** 2 for j in j_range)


_PARTITION = None


def make_lp_partition():
    global _PARTITION
    if _PARTITION is None:
        _PARTITION = LPPartition()
    return _PARTITION


# ---------------------------------------------------------------------------
# smoothstep cutoff for the chirp

# S(t) = t^5 (126 - 420 t + 540 t^2 - 315 t^3 + 70 t^4): C^4 at both ends
_SMOOTHSTEP = [Fraction(c) for c in (0, 0, 0, 0, 0, 126, -420, 540, -315, 70)]


def smoothstep(t):
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    out = np.zeros(t.shape)
    for c in reversed(_SMOOTHSTEP):
        out = out * t + float(c)
    return out


def chirp_cutoff(xi):
    """C^4 cutoff: rises on [1/2, 3/4], equals 1 on [3/4, 5/4], falls on [5/4, 2]."""
    xi = np.asarray(xi, dtype=float)
    up = smoothstep((xi - 0.5) / 0.25)
    down = smoothstep((2.0 - xi) / 0.75)
    return np.where((xi > 0.5) & (xi < 2.0), np.minimum(up, down), 0.0)


# ---------------------------------------------------------------------------
# bank

def one():
    return Multiplier(lambda r: np.ones(r.shape, dtype=complex), (-math.inf, math.inf),
                      label="one")


def imagpow(tau):
    """rho^{i tau} on (0, inf)."""
    tau = float(tau)
    return Multiplier(lambda r: np.exp(1j * tau * np.log(r)), (1e-300, math.inf),
                      label=f"imagpow:{tau:g}")


def bochner_riesz(lam):
    """(1 - rho)_+^lambda."""
    if not lam > 0:
        raise InvalidArgumentError("Bochner-Riesz order must be positive")
    lam = float(lam)
    return Multiplier(lambda r: np.abs(1.0 - r) ** lam, (0.0, 1.0), breakpoints=(1.0,),
                      smooth=False, label=f"br:{lam:g}")


def chirp(N):
    """chi(xi) e^{i N xi^2} with the C^4 cutoff chi."""
    if N < 2:
        raise InvalidArgumentError("chirp needs N >= 2")
    N = float(N)
    return Multiplier(lambda x: chirp_cutoff(x) * np.exp(1j * N * x * x), (0.5, 2.0),
                      breakpoints=(0.75, 1.25), label=f"chirp:{N:g}")


def fejer():
    """eta(xi) = (1 - |xi|)_+."""
    return Multiplier(lambda x: 1.0 - np.abs(x), (-1.0, 1.0), breakpoints=(-1.0, 0.0, 1.0),
                      smooth=False, label="fejer")


def sharp_pair(N, d, c=0.125, points_per_unit=64):
    """The pair m_N = sqrt(N) chi_[1, 1+c/N] and f_N(s) = s^{-(d+1)/2} e^{-is} chi_[1,N](s).

    f_N is returned as a SampledFunction carrying its exact evaluator; the
    samples (``points_per_unit`` per unit length) serve the norm routines.
    """
    if N < 2:
        raise InvalidArgumentError("need N >= 2")
    if not 0 < c <= 1:
        raise InvalidArgumentError("need 0 < c <= 1")
    if not d > 1:
        raise InvalidArgumentError("need d > 1")
    N = float(N)
    root = math.sqrt(N)
    hi = 1.0 + c / N
    m = Multiplier(lambda r: np.full(r.shape, root, dtype=complex), (1.0, hi),
                   breakpoints=(1.0, hi), smooth=False, label=f"sharp:{N:g}")
    e = -(d + 1) / 2.0

    def f(s):
        s = np.asarray(s, dtype=float)
        inside = (s >= 1.0) & (s <= N)
        out = np.zeros(s.shape, dtype=complex)
        t = s[inside]
        out[inside] = t ** e * np.exp(-1j * t)
        return out

    grid = np.linspace(1.0, N, int(round((N - 1) * points_per_unit)) + 1)
    fn = SampledFunction(grid, f(grid), "half_line", tail_model=None, evaluator=f,
                         meta={"support": (1.0, N), "breakpoints": (1.0, N), "N": N, "d": d,
                               "c": c})
    return m, fn


def jodeit_extend(b):
    """sum_k b_k eta(xi - k) for finitely many integer-indexed coefficients."""
    items = sorted((int(k), complex(v)) for k, v in dict(b).items())
    if not items:
        raise EmptyInputError("no coefficients")
    ks = np.array([k for k, _ in items])
    vs = np.array([v for _, v in items])

    def f(x):
        out = np.zeros(x.shape, dtype=complex)
        base = np.floor(x).astype(int)
        # only the two integers bracketing x contribute
        for shift in (0, 1):
            k = base + shift
            pos = np.searchsorted(ks, k)
            pos = np.clip(pos, 0, ks.size - 1)
            hit = ks[pos] == k
            w = np.clip(1.0 - np.abs(x - k), 0.0, None)
            out += np.where(hit, vs[pos] * w, 0.0)
        return out

    lo, hi = ks[0] - 1.0, ks[-1] + 1.0
    bps = np.arange(lo, hi + 1.0)
    return Multiplier(f, (lo, hi), bps, smooth=False, label="jodeit")


# ---------------------------------------------------------------------------
# labels

def resolve_label(label):
    """Multiplier from a CLI label: br:L, chirp:N, sharp:N[:d[:c]], fejer, imagpow:T, one, phi."""
    parts = str(label).split(":")
    head, args = parts[0], parts[1:]
    try:
        if head == "one" and not args:
            return one()
        if head == "fejer" and not args:
            return fejer()
        if head == "phi" and not args:
            return make_lp_partition().phi
        if head == "br" and len(args) == 1:
            return bochner_riesz(float(args[0]))
        if head == "chirp" and len(args) == 1:
            return chirp(int(args[0]))
        if head == "imagpow" and len(args) == 1:
            return imagpow(float(args[0]))
        if head == "sharp" and 1 <= len(args) <= 3:
            N = int(args[0])
            d = float(args[1]) if len(args) > 1 else 2.0
            c = float(args[2]) if len(args) > 2 else 0.125
            return sharp_pair(N, d, c)[0]
    except ValueError as exc:
        raise LabelLookupError(f"bad parameter in label {label!r}: {exc}") from None
    raise LabelLookupError(f"unknown multiplier label {label!r}")


# ---------------------------------------------------------------------------
# retract maps

ANALYZE_GRID = uniform_grid(256.0, 0.25)


def analyze(m, phi=None, j=0, x_grid=None, spec=None):
    """[A m]_j = F^{-1}[phi m(2^j .)] on a uniform x-grid (default h=1/4, |x|<=256)."""
    phi = phi or make_lp_partition().phi
    x_grid = ANALYZE_GRID if x_grid is None else x_grid
    return localized_kernel(m, phi, 2.0 ** j, x_grid, spec or FAST_SPEC)


def _line_transform_samples(G, xi):
    """G^(xi) = int G(x) e^{-i x xi} dx by the trapezoid rule on G's grid.

    On a uniform grid of step h this is exact for G band-limited to
    |xi| < pi/h - max|xi|, up to the truncation of the grid.
    """
    w = trapezoid_weights(G.grid) * G.values
    xi = np.asarray(xi, dtype=float)
    out = np.empty(xi.shape, dtype=complex)
    flat = xi.ravel()
    chunk = max(1, (1 << 22) // max(G.grid.size, 1))
    res = []
    for i in range(0, flat.size, chunk):
        res.append(np.exp(-1j * np.outer(flat[i:i + chunk], G.grid)) @ w)
    out.ravel()[:] = np.concatenate(res) if res else np.zeros(0)
    return out


def synthesize(G, k_range=None, phi=None):
    """B G = sum_k phi(2^{-k} .) G_k^(2^{-k} .).

    ``G`` is a dict {k: SampledFunction} or a sequence aligned with
    ``k_range``.  At each rho only the (at most two) k with
    2^{-k} rho in supp phi contribute.
    """
    phi = phi or make_lp_partition().phi
    if isinstance(G, dict):
        pieces = dict(G)
    else:
        G = list(G)
        if k_range is None:
            k_range = range(len(G))
        pieces = dict(zip(list(k_range), G))
    if not pieces:
        raise EmptyInputError("empty k range")
    ks = sorted(pieces)
    lo, hi = phi.support

    def f(rho):
        out = np.zeros(rho.shape, dtype=complex)
        for k in ks:
            xi = rho * 2.0 ** (-k)
            act = (xi > lo) & (xi < hi)
            if np.any(act):
                out[act] += phi(xi[act]) * _line_transform_samples(pieces[k], xi[act])
        return out

    support = (lo * 2.0 ** ks[0], hi * 2.0 ** ks[-1])
    return Multiplier(f, support, label="synth")
