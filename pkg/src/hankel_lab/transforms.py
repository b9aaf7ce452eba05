"""Fourier-Bessel, cosine and line Fourier transforms by panel quadrature.

Conventions (all factors of 2*pi live here):

* Fourier-Bessel transform  B_d f(rho) = int_0^inf f(s) B_d(s rho) s^{d-1} ds,
  self-inverse and unitary on L^2(r^{d-1} dr).
* Line Fourier transform    g^(xi) = int g(x) e^{-i x xi} dx,
  inverse F^{-1}[g](x) = (2 pi)^{-1} int g(xi) e^{i x xi} dxi.

Oscillatory integrals are computed with composite Gauss-Legendre rules on
panels no wider than 2 pi / (panels_per_oscillation * frequency).  Panels are
aligned to declared breakpoints (jumps or algebraic singularities) and
graded geometrically towards them.  Targets are grouped in dyadic
frequency bands so that each band uses panels sized for its own largest
frequency.
"""

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import (
    AccuracyFailure,
    DivergentIntegralError,
    InvalidArgumentError,
    UnsupportedInputError,
)
from .special_functions import b_kernel

TWO_PI = 2.0 * math.pi
X_MAX_DEFAULT = 2.0 ** 12
_CHUNK = 1 << 22


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre settings.

    nodes : nodes per panel.
    panels_per_oscillation : minimum panels per period 2 pi / frequency.
    tol : absolute tolerance per output node.
    max_subdivisions : how many further halvings may be tried while
        chasing ``tol``.
    estimate_error : compare against a run with every panel halved (the
        finer value is returned).
    grading_levels : number of geometric panels towards each breakpoint.
    max_width : panel width cap for slowly oscillating integrands.
    split : every panel is cut into this many equal parts; refinement
        multiplies it, so a refined rule always differs even where the
        panels are fixed by breakpoint grading rather than by frequency.
    """

    nodes: int = 16
    panels_per_oscillation: float = 8.0
    tol: float = 1e-9
    max_subdivisions: int = 3
    estimate_error: bool = True
    grading_levels: int = 14
    max_width: float = math.inf
    split: int = 1

    def __post_init__(self):
        if self.nodes * self.panels_per_oscillation < 4:
            raise InvalidArgumentError("fewer than 4 nodes per oscillation")
        if not self.tol > 0:
            raise InvalidArgumentError("tolerance must be positive")

    def refined(self, factor=2.0):
        ppo = max(self.panels_per_oscillation * factor, 4.0 / self.nodes)
        split = max(1, int(round(self.split * factor)))
        return replace(self, panels_per_oscillation=ppo, max_width=self.max_width / factor,
                       split=split)

    def without_estimate(self):
        return replace(self, estimate_error=False)

    def tightened(self, factor=10.0):
        return replace(self, tol=self.tol / factor)


# Lighter rule for large scans: 12 nodes per oscillation, accurate to ~1e-11.
FAST_SPEC = QuadratureSpec(nodes=12, panels_per_oscillation=1.0, estimate_error=False,
                           max_width=0.25)


@dataclass
class SampledFunction:
    """Complex samples on a strictly increasing grid.

    ``domain`` is "half_line" or "line".  ``tail_model`` is an optional
    algebraic decay exponent alpha (|f| ~ x^{-alpha}).  ``evaluator`` holds
    the exact function when it is known; transforms prefer it over
    interpolation.  ``meta`` carries breakpoints, support and diagnostics.
    """

    grid: np.ndarray
    values: np.ndarray
    domain: str = "half_line"
    tail_model: float = None
    evaluator: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape:
            raise InvalidArgumentError("grid and values must be 1-D of equal length")
        if self.grid.size > 1 and not np.all(np.diff(self.grid) > 0):
            raise InvalidArgumentError("grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise InvalidArgumentError("values must be finite")
        if self.domain not in ("half_line", "line"):
            raise InvalidArgumentError(f"unknown domain {self.domain!r}")

    def __call__(self, x):
        if self.evaluator is not None:
            return self.evaluator(x)
        return interpolate(self, x)

    @property
    def support(self):
        return self.meta.get("support", (float(self.grid[0]), float(self.grid[-1])))

    @property
    def breakpoints(self):
        return tuple(self.meta.get("breakpoints", ()))

    def tail_consistent(self, factor=4.0):
        """Check the declared tail exponent against the last decade of samples."""
        if self.tail_model is None:
            return True
        x = np.abs(self.grid)
        top = x.max()
        sel = x >= top / 10.0
        if sel.sum() < 4 or top / 10.0 <= 0:
            return True
        lo = np.abs(self.values[sel & (x <= top / 10.0 * 1.5)])
        hi = np.abs(self.values[sel & (x >= top / 1.5)])
        if lo.size == 0 or hi.size == 0 or lo.mean() == 0:
            return True
        predicted = 10.0 ** (-self.tail_model)
        observed = hi.mean() / lo.mean()
        return predicted / factor <= observed <= predicted * factor

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("x,re,im\n")
            for x, v in zip(self.grid, self.values):
                fh.write(f"{float(x)!r},{float(v.real)!r},{float(v.imag)!r}\n")
        meta = {"domain": self.domain, "tail_model": self.tail_model, "n": int(self.grid.size),
                "meta": _jsonable(self.meta)}
        with open(str(path) + ".json", "w") as fh:
            json.dump(meta, fh, sort_keys=True, indent=1)

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        with open(str(path) + ".json") as fh:
            meta = json.load(fh)
        return cls(data[:, 0], data[:, 1] + 1j * data[:, 2], meta["domain"], meta["tail_model"],
                   meta=meta.get("meta", {}))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def interpolate(sf, x):
    """Cubic-spline interpolation of a sample (zero outside the grid)."""
    from scipy.interpolate import CubicSpline

    x = np.asarray(x, dtype=float)
    re = CubicSpline(sf.grid, sf.values.real)(x)
    im = CubicSpline(sf.grid, sf.values.imag)(x)
    out = re + 1j * im
    out[(x < sf.grid[0]) | (x > sf.grid[-1])] = 0.0
    return out


# ---------------------------------------------------------------------------
# grids

def uniform_grid(x_max, h, symmetric=True):
    n = int(round(x_max / h))
    pos = h * np.arange(n + 1)
    if symmetric:
        return np.concatenate([-pos[:0:-1], pos])
    return pos


def hybrid_grid(x_max=X_MAX_DEFAULT, density=16, x_lin=8.0, symmetric=True):
    """Linear spacing 1/density on [0, x_lin], then geometric growth to x_max.

    The spacing is continuous at x_lin: beyond it each step is x/(density*x_lin).
    Returns the symmetric grid for the line, or the non-negative half.
    """
    h = 1.0 / density
    lin = h * np.arange(int(round(x_lin * density)) + 1)
    ratio = 1.0 + 1.0 / (density * x_lin)
    if x_max > lin[-1]:
        n = int(math.ceil(math.log(x_max / lin[-1]) / math.log(ratio)))
        geo = lin[-1] * ratio ** np.arange(1, n + 1)
        geo = geo[geo < x_max * (1 - 1e-12)]
        pos = np.concatenate([lin, geo, [x_max]])
    else:
        pos = lin[lin <= x_max]
    if symmetric:
        return np.concatenate([-pos[:0:-1], pos])
    return pos


def cell_edges(grid, lower=None):
    """Cell boundaries at midpoints; outer cells mirror their inner neighbour.

    ``lower`` clamps the first edge (0 for the half-line).
    """
    grid = np.asarray(grid, dtype=float)
    mid = 0.5 * (grid[1:] + grid[:-1])
    first = grid[0] - (mid[0] - grid[0])
    last = grid[-1] + (grid[-1] - mid[-1])
    if lower is not None:
        first = max(first, lower)
    return np.concatenate([[first], mid, [last]])


def trapezoid_weights(grid):
    grid = np.asarray(grid, dtype=float)
    w = np.zeros_like(grid)
    dx = np.diff(grid)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


# ---------------------------------------------------------------------------
# panel quadrature

@lru_cache(maxsize=None)
def _gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _graded_edges(a, b, left_sing, right_sing, levels, ratio=0.15):
    """Edges of [a, b] refined geometrically towards singular ends."""
    edges = [a, b]
    if left_sing and levels:
        edges += list(a + (b - a) * 0.5 * ratio ** np.arange(levels))
    if right_sing and levels:
        edges += list(b - (b - a) * 0.5 * ratio ** np.arange(levels))
    return np.unique(np.array(edges))


def panel_rule(a, b, freq, spec, breakpoints=(), singular=True):
    """Composite Gauss-Legendre nodes and weights on [a, b].

    Parameters
    ----------
    a, b : float
        Finite interval.
    freq : float
        Largest angular frequency to resolve; panels are at most
        2 pi / (spec.panels_per_oscillation * max(freq, 1)) wide.
    breakpoints : sequence of float
        Interior points where the integrand is not smooth; panels are
        aligned to them and graded geometrically when ``singular``.
    """
    if not (np.isfinite(a) and np.isfinite(b)) or b <= a:
        raise InvalidArgumentError(f"bad interval [{a}, {b}]")
    cuts = sorted({float(a), float(b)} | {float(p) for p in breakpoints if a < p < b})
    sing = {float(p) for p in breakpoints}
    width = min(TWO_PI / (spec.panels_per_oscillation * max(freq, 1.0)), spec.max_width)
    gx, gw = _gauss_legendre(spec.nodes)
    edges = []
    for u, v in zip(cuts[:-1], cuts[1:]):
        base = _graded_edges(u, v, singular and u in sing, singular and v in sing, spec.grading_levels)
        for p, q in zip(base[:-1], base[1:]):
            n = max(1, int(math.ceil((q - p) / width))) * spec.split
            edges.append(np.linspace(p, q, n + 1)[:-1])
    edges = np.concatenate(edges + [[cuts[-1]]])
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    weights = (half[:, None] * gw[None, :]).ravel()
    return nodes, weights


def _bands(targets):
    """Group |targets| into dyadic bands; yields (index array, band max)."""
    mag = np.abs(np.asarray(targets, dtype=float))
    key = np.ceil(np.log2(np.maximum(mag, 1.0))).astype(int)
    for k in np.unique(key):
        idx = np.nonzero(key == k)[0]
        yield idx, float(mag[idx].max())


def oscillatory_apply(kernel, g, targets, a, b, spec, breakpoints=(), freq_offset=0.0,
                      freq_scale=1.0):
    """Evaluate I(y) = int_a^b g(s) kernel(s, y) ds for every target y.

    ``kernel(s, y)`` receives broadcastable arrays (nodes along axis 1).
    The oscillation frequency at target y is freq_scale*|y| + freq_offset.

    Returns
    -------
    values : ndarray
    err : float
        Largest estimated error (0 when estimation is disabled).
    """
    targets = np.asarray(targets, dtype=float)
    out = None
    worst = 0.0
    for idx, ymax in _bands(targets):
        y = targets[idx]
        freq = freq_scale * ymax + freq_offset
        val = _apply_band(kernel, g, y, a, b, freq, spec, breakpoints)
        err = 0.0
        if spec.estimate_error:
            # compare with every panel halved and keep the finer value
            cur_spec = spec
            level = 0
            while True:
                cur_spec = cur_spec.refined(2.0)
                fine = _apply_band(kernel, g, y, a, b, freq, cur_spec, breakpoints)
                err = float(np.max(np.abs(fine - val), initial=0.0))
                val = fine
                if err <= spec.tol:
                    break
                if level >= spec.max_subdivisions:
                    raise AccuracyFailure(
                        f"quadrature error {err:.3g} above tolerance {spec.tol:.3g}", achieved=err)
                level += 1
        worst = max(worst, err)
        if out is None:
            out = np.zeros(targets.shape, dtype=val.dtype)
        elif val.dtype.kind == "c" and out.dtype.kind != "c":
            out = out.astype(complex)
        out[idx] = val
    if out is None:
        out = np.zeros(targets.shape)
    return out, worst


def _apply_band(kernel, g, y, a, b, freq, spec, breakpoints):
    s, w = panel_rule(a, b, freq, spec, breakpoints)
    gw = np.asarray(g(s)) * w
    chunk = max(1, _CHUNK // max(s.size, 1))
    parts = []
    for i in range(0, y.size, chunk):
        yy = y[i:i + chunk]
        parts.append(kernel(s[None, :], yy[:, None]) @ gw)
    return np.concatenate(parts) if parts else np.zeros(0)


# ---------------------------------------------------------------------------
# transforms

def _resolve_source(f, support, breakpoints, tail_decay, d, tol):
    """Turn f (callable or SampledFunction) into (callable, [a, b], breakpoints)."""
    if isinstance(f, SampledFunction):
        if support is None:
            support = f.support
        breakpoints = tuple(breakpoints) + f.breakpoints
        if tail_decay is None:
            tail_decay = f.tail_model
        func = f
    else:
        func = f
    if support is None:
        raise UnsupportedInputError("support must be declared for callables")
    a, b = float(support[0]), float(support[1])
    if not np.isfinite(b):
        if tail_decay is None:
            raise DivergentIntegralError("infinite support needs a tail decay exponent")
        if tail_decay <= d:
            raise DivergentIntegralError(
                f"tail decay s^-{tail_decay} does not beat s^-{d}")
        b = _tail_cut(func, a, d, tail_decay, tol)
    return func, a, b, tuple(breakpoints)


def _tail_cut(func, a, d, alpha, tol):
    """Smallest doubling S with sup_{[S/2, S]} |f| * S^d / (alpha - d) < tol.

    The amplitude of |f| <= C s^-alpha is calibrated on [S/2, S], so the
    bound int_S^inf C s^{d-1-alpha} ds needs no user-supplied constant.
    """
    b = max(2.0 * a, a + 1.0, 1.0)
    while b < X_MAX_DEFAULT:
        s = np.linspace(0.5 * b, b, 33)
        amp = float(np.max(np.abs(func(s))))
        if amp * b ** d / (alpha - d) < tol:
            return b
        b *= 2.0
    return X_MAX_DEFAULT


def hankel_eval(d, f, rho, spec=None, support=None, breakpoints=(), tail_decay=None,
                return_error=False, freq_offset=0.0):
    """B_d f at arbitrary points rho (array in, array out).

    ``freq_offset`` adds the oscillation frequency of f itself to the
    panel sizing (for example 1 for f(s) containing e^{-is}).
    """
    spec = spec or QuadratureSpec()
    func, a, b, bps = _resolve_source(f, support, breakpoints, tail_decay, d, spec.tol)
    rho = np.asarray(rho, dtype=float)
    if a == 0.0 and float(d - 1.0) != int(d - 1.0):
        bps = bps + (0.0,)  # s^{d-1} is not smooth at the origin

    def g(s):
        return func(s) * s ** (d - 1.0)

    def kernel(s, y):
        return b_kernel(d, np.abs(s * y))

    vals, err = oscillatory_apply(kernel, g, rho.ravel(), a, b, spec, bps, freq_offset)
    vals = vals.reshape(rho.shape)
    return (vals, err) if return_error else vals


def fourier_bessel(d, f, rho_grid, spec=None, support=None, breakpoints=(), tail_decay=None):
    """Fourier-Bessel transform B_d f on rho_grid.

    Parameters
    ----------
    d : float
        d > 1 (d = 1 is accepted and reduces to the cosine transform).
    f : callable or SampledFunction
        The input on the half-line.
    rho_grid : array_like
        Strictly increasing output nodes.
    support : (a, b), optional
        Support of f; b may be inf when ``tail_decay`` alpha > d is given.
    breakpoints : sequence
        Points where f is not smooth.

    Returns
    -------
    SampledFunction
        With ``meta["quad_error"]`` the largest estimated node error.
    """
    if d < 1:
        raise InvalidArgumentError("d must be >= 1")
    spec = spec or QuadratureSpec()
    vals, err = hankel_eval(d, f, rho_grid, spec, support, breakpoints, tail_decay, True)
    return SampledFunction(rho_grid, vals, "half_line", meta={"quad_error": err, "d": d})


def cosine_transform(f, x_grid, spec=None, support=None, breakpoints=(), tail_decay=None):
    """sqrt(2/pi) int_0^inf f(s) cos(s x) ds, i.e. B_1 f."""
    spec = spec or QuadratureSpec()
    func, a, b, bps = _resolve_source(f, support, breakpoints, tail_decay, 1.0, spec.tol)
    x = np.asarray(x_grid, dtype=float)
    c = math.sqrt(2.0 / math.pi)

    def kernel(s, y):
        return c * np.cos(s * y)

    vals, err = oscillatory_apply(kernel, func, x, a, b, spec, bps)
    return SampledFunction(x, vals, "half_line", meta={"quad_error": err, "d": 1.0})


def _line_support(support):
    if support is None:
        raise UnsupportedInputError("compact support must be declared")
    a, b = float(support[0]), float(support[1])
    if not (np.isfinite(a) and np.isfinite(b)):
        raise UnsupportedInputError("unbounded support; localize with a cutoff first")
    return a, b


def inv_fourier_line_eval(g, x, support, spec=None, breakpoints=()):
    """(2 pi)^{-1} int g(xi) e^{i x xi} dxi at points x; returns (values, err)."""
    spec = spec or QuadratureSpec()
    a, b = _line_support(support)
    x = np.asarray(x, dtype=float)
    off = 0.5 * (a + b)

    def kernel(s, y):
        # modulate about the centre so the phase is bounded by |y|*(b-a)/2
        return np.exp(1j * y * (s - off))

    vals, err = oscillatory_apply(kernel, g, x, a, b, spec, breakpoints,
                                  freq_scale=1.0)
    vals = vals * np.exp(1j * x * off) / TWO_PI
    return vals, err / TWO_PI


def inv_fourier_line(g, x_grid, support=None, spec=None, breakpoints=()):
    """Inverse line Fourier transform of a compactly supported g.

    F^{-1}[g](x) = (2 pi)^{-1} int g(xi) e^{i x xi} dxi.
    """
    vals, err = inv_fourier_line_eval(g, x_grid, support, spec, breakpoints)
    return SampledFunction(x_grid, vals, "line", meta={"quad_error": err})


def fourier_line(g, xi_grid, support=None, spec=None, breakpoints=()):
    """Forward transform g^(xi) = int g(x) e^{-i x xi} dx of a compactly supported g."""
    xi = np.asarray(xi_grid, dtype=float)
    vals, err = inv_fourier_line_eval(g, -xi, support, spec, breakpoints)
    return SampledFunction(xi, TWO_PI * vals, "line", meta={"quad_error": TWO_PI * err})


def scaled_breakpoints(m, t, lo, hi):
    """Breakpoints of xi -> m(t xi) inside (lo, hi), support edges included."""
    pts = set(getattr(m, "breakpoints", ()))
    pts.update(float(e) for e in getattr(m, "support", ()) if math.isfinite(e))
    return tuple(sorted(p / t for p in pts if lo < p / t < hi))


def cutoff_breakpoints(m, phi, t):
    """Panel breakpoints for xi -> phi(xi) m(t xi) on supp phi.

    The edges of supp phi are included: a bump that vanishes like
    exp(-1/eps) is flat but not analytic there, and geometric grading
    towards the edges restores fast convergence.
    """
    lo, hi = phi.support
    own = tuple(float(p) for p in getattr(phi, "breakpoints", ()) if lo < p < hi)
    return tuple(sorted(set(scaled_breakpoints(m, t, lo, hi) + own + (float(lo), float(hi)))))


def localized_kernel(m, phi, t, x_grid, spec=None):
    """k_t = F^{-1}[phi m(t .)] sampled on x_grid.

    ``m`` is a Multiplier (callable with ``breakpoints``), ``phi`` a cutoff
    with a ``support`` attribute inside (0, inf).
    """
    spec = spec or QuadratureSpec()
    lo, hi = phi.support
    bps = cutoff_breakpoints(m, phi, t)

    def g(xi):
        return phi(xi) * m(t * xi)

    vals, err = inv_fourier_line_eval(g, x_grid, (lo, hi), spec, bps)
    return SampledFunction(x_grid, vals, "line", meta={"quad_error": err, "t": t})
