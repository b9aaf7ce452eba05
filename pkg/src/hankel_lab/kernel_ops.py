"""Two-Bessel kernels, the operators T_m and T^j, and the H/S/E decomposition.

K_{a,b}[m](r, s) = int m(rho) B_a(rho r) B_b(rho s) rho^{a-1} drho is
computed for whole grids at once as a product of two Bessel matrices over
a shared panel rule in rho.
"""

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .criteria import a_j
from .errors import (
    AccuracyFailure,
    FitError,
    InvalidArgumentError,
    PreconditionError,
    StepSizeError,
)
from .multiplier_bank import Multiplier, make_lp_partition
from .spaces import LorentzIndex, WeightedMeasure, lorentz_norm
from .special_functions import DEFAULT_M, AsymptoticExpansion, b_kernel
from .transforms import (
    FAST_SPEC,
    TWO_PI,
    QuadratureSpec,
    SampledFunction,
    cosine_transform,
    hankel_eval,
    inv_fourier_line_eval,
    oscillatory_apply,
    panel_rule,
    cutoff_breakpoints,
)

_MAGIC = b"HKGRID01"


# ---------------------------------------------------------------------------
# kernel grids

@dataclass
class KernelGrid:
    r: np.ndarray
    s: np.ndarray
    values: np.ndarray
    orders: tuple
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.s = np.asarray(self.s, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.r.size, self.s.size):
            raise InvalidArgumentError("kernel matrix shape does not match the grids")
        if not np.all(np.isfinite(self.values)):
            raise InvalidArgumentError("kernel values must be finite")

    def symmetry_error(self):
        """max |K(r,s) - K(s,r)| / max |K| for square grids with r == s."""
        if self.r.shape != self.s.shape or not np.array_equal(self.r, self.s):
            raise InvalidArgumentError("symmetry needs identical r and s grids")
        scale = np.max(np.abs(self.values), initial=0.0) or 1.0
        return float(np.max(np.abs(self.values - self.values.T)) / scale)

    def save(self, path):
        """Binary file: magic, header length, JSON header, then r, s, K (complex128)."""
        header = json.dumps({"orders": list(self.orders), "label": self.label,
                             "nr": int(self.r.size), "ns": int(self.s.size),
                             "meta": self.meta}, sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<Q", len(header)))
            fh.write(header)
            fh.write(self.r.astype("<f8").tobytes())
            fh.write(self.s.astype("<f8").tobytes())
            fh.write(self.values.astype("<c16").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            if fh.read(8) != _MAGIC:
                raise InvalidArgumentError("not a kernel grid file")
            (n,) = struct.unpack("<Q", fh.read(8))
            head = json.loads(fh.read(n))
            nr, ns = head["nr"], head["ns"]
            r = np.frombuffer(fh.read(8 * nr), "<f8")
            s = np.frombuffer(fh.read(8 * ns), "<f8")
            v = np.frombuffer(fh.read(16 * nr * ns), "<c16").reshape(nr, ns)
        return cls(r.copy(), s.copy(), v.copy(), tuple(head["orders"]), head["label"],
                   head["meta"])

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("r,s,re,im\n")
            for i, r in enumerate(self.r):
                for k, s in enumerate(self.s):
                    v = self.values[i, k]
                    fh.write(f"{float(r)!r},{float(s)!r},{float(v.real)!r},{float(v.imag)!r}\n")


def _rho_rule(m, lo, hi, freq, spec):
    a, b = max(lo, m.support[0]), min(hi, m.support[1])
    if a >= b:
        return np.zeros(0), np.zeros(0)
    # breakpoints on the ends are kept: panel_rule grades towards them
    bps = [x for x in m.breakpoints if a <= x <= b]
    return panel_rule(a, b, freq, spec, bps)


def _kab_matrix(m, a, b, r, s, spec):
    freq = float(np.max(np.abs(r), initial=0.0) + np.max(np.abs(s), initial=0.0))
    rho, w = _rho_rule(m, 0.5, 2.0, freq, spec)
    if rho.size == 0:
        return np.zeros((r.size, s.size), dtype=complex)
    wt = m(rho) * rho ** (a - 1.0) * w
    Ba = b_kernel(a, np.abs(np.outer(r, rho)))
    Bb = b_kernel(b, np.abs(np.outer(s, rho)))
    return (Ba * wt) @ Bb.T


def kernel_kab(m, a, b, r_nodes, s_nodes, spec=None):
    """K_{a,b}[m] on r_nodes x s_nodes for m supported in [1/2, 2].

    Panels are sized for the frequency max(r) + max(s).  With
    ``spec.estimate_error`` the matrix is compared with a rule whose panels
    are all halved, and refined until within ``spec.tol`` (relative to
    max |K|); the finest matrix is returned.
    """
    spec = spec or QuadratureSpec()
    if m.support[0] < 0.5 - 1e-12 or m.support[1] > 2.0 + 1e-12:
        raise PreconditionError("multiplier must be supported in [1/2, 2]")
    if a < 1 or b < 1:
        raise InvalidArgumentError("orders must be >= 1")
    r = np.asarray(r_nodes, dtype=float)
    s = np.asarray(s_nodes, dtype=float)
    K = _kab_matrix(m, a, b, r, s, spec)
    err = 0.0
    if spec.estimate_error:
        scale = float(np.max(np.abs(K), initial=0.0)) or 1.0
        cur = spec
        level = 0
        while True:
            cur = cur.refined(2.0)
            fine = _kab_matrix(m, a, b, r, s, cur)
            err = float(np.max(np.abs(fine - K), initial=0.0)) / scale
            K = fine
            if err <= spec.tol:
                break
            if level >= spec.max_subdivisions:
                raise AccuracyFailure(f"kernel quadrature error {err:.3g}", achieved=err)
            level += 1
    return KernelGrid(r, s, K, (a, b), getattr(m, "label", ""), {"quad_error": err})


# ---------------------------------------------------------------------------
# kernel bound

def _fd_step(x):
    h = 1e-4 * (1.0 + x)
    if np.any(x + h == x):
        raise StepSizeError("finite-difference step underflows")
    return h


def kernel_derivative(m, a, b, r, s, beta, gamma, spec=None):
    """d_r^beta d_s^gamma K_{a,b}[m] by centred differences (beta, gamma in {0, 1}).

    K is even in r and s, so r - h is replaced by |r - h|.
    """
    if beta not in (0, 1) or gamma not in (0, 1):
        raise InvalidArgumentError("only first derivatives are supported")
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    hr = _fd_step(r)
    hs = _fd_step(s)
    r_pts = [(r, 1.0)] if beta == 0 else [(r + hr, 1.0), (np.abs(r - hr), -1.0)]
    s_pts = [(s, 1.0)] if gamma == 0 else [(s + hs, 1.0), (np.abs(s - hs), -1.0)]
    out = 0.0
    for rr, cr in r_pts:
        for ss, cs in s_pts:
            out = out + cr * cs * kernel_kab(m, a, b, rr, ss, spec).values
    if beta:
        out = out / (2.0 * hr)[:, None]
    if gamma:
        out = out / (2.0 * hs)[None, :]
    return out


def w_function(m, N, x_max, h=1.0 / 16, spec=None):
    """W(x) = int |F^{-1}[m](x-u)| (1+|u|)^{-N} du on a uniform grid |x| <= x_max."""
    n = int(round(x_max / h))
    x = h * np.arange(-n, n + 1)
    lo, hi = m.support
    kappa, _ = inv_fourier_line_eval(m, x, (lo, hi), spec or FAST_SPEC, m.breakpoints)
    weight = (1.0 + np.abs(x)) ** (-float(N))
    W = np.convolve(np.abs(kappa), weight, mode="same") * h
    return x, W


def kernest_check(m, a, b, N=4, beta=0, gamma=0, r_nodes=None, s_nodes=None, spec=None):
    """Empirical constant in the two-Bessel kernel bound.

    LHS = |d_r^beta d_s^gamma K_{a,b}[m](r, s)| and
    RHS = sum_{+-,+-} (1+r)^{-(a-1)/2} (1+s)^{-(b-1)/2} W(+-r +- s).
    Returns a dict with ``empirical_C`` (max LHS/RHS), ``worst_point`` and
    the ratio matrix.
    """
    if not N > 1:
        raise PreconditionError("need N > 1")
    r = np.linspace(0.0, 40.0, 161) if r_nodes is None else np.asarray(r_nodes, float)
    s = r if s_nodes is None else np.asarray(s_nodes, float)
    lhs = np.abs(kernel_derivative(m, a, b, r, s, beta, gamma, spec))
    reach = float(r.max() + s.max())
    x, W = w_function(m, N, 2.0 * reach + 40.0)
    R, S = np.meshgrid(r, s, indexing="ij")
    total = np.zeros(R.shape)
    for sr in (1.0, -1.0):
        for ss in (1.0, -1.0):
            total += np.interp(sr * R + ss * S, x, W)
    rhs = (1.0 + R) ** (-(a - 1.0) / 2.0) * (1.0 + S) ** (-(b - 1.0) / 2.0) * total
    ratio = lhs / rhs
    i, k = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    return {"empirical_C": float(ratio[i, k]), "worst_point": (float(r[i]), float(s[k])),
            "ratio": ratio, "a": a, "b": b, "N": N, "beta": beta, "gamma": gamma}


def elemconv_check(g, R, N1=4, M=10, u_max=200.0, h=1.0 / 64):
    """Both sides of (1+R)^{-M} int|g|(1+|u|)^{-N1} <= C (1+R)^{-M+N1} int|g(R+u)|(1+|u|)^{-N1}.

    Returns (lhs, rhs_without_C).
    """
    n = int(round(u_max / h))
    u = h * np.arange(-n, n + 1)
    w = (1.0 + np.abs(u)) ** (-float(N1))
    lhs = (1.0 + R) ** (-M) * float(np.sum(np.abs(g(u)) * w) * h)
    rhs = (1.0 + R) ** (-M + N1) * float(np.sum(np.abs(g(R + u)) * w) * h)
    return lhs, rhs


# ---------------------------------------------------------------------------
# operators

def apply_tm(m, d, f, r_grid=None, spec=None, rho_max=160.0, support=None, breakpoints=()):
    """T_m f = B_d[m B_d f] on r_grid (SampledFunction out).

    The outer integral runs over supp m intersected with [0, rho_max].
    """
    spec = spec or QuadratureSpec(panels_per_oscillation=2.0, tol=1e-7)
    if isinstance(f, SampledFunction):
        support = support or f.support
        breakpoints = tuple(breakpoints) + f.breakpoints
        r_grid = f.grid if r_grid is None else r_grid
    if support is None:
        raise InvalidArgumentError("support of f must be declared")
    r_grid = np.asarray(r_grid, dtype=float)
    inner_spec = spec.without_estimate()

    def inner(rho):
        return m(rho) * hankel_eval(d, f, rho, inner_spec, support=support,
                                    breakpoints=breakpoints)

    lo = max(0.0, m.support[0])
    hi = min(rho_max, m.support[1])
    bps = [b for b in m.breakpoints if lo < b < hi]
    vals, err = hankel_eval(d, inner, r_grid, spec, support=(lo, hi), breakpoints=bps,
                            return_error=True)
    return SampledFunction(r_grid, vals, "half_line", meta={"quad_error": err, "d": d})


def _s_rule(support, shells, spec, nodes_per_shell=4):
    """GL nodes on supp f with panel edges at the dyadic shell boundaries."""
    a, b = support
    edges = sorted({a, b} | {2.0 ** n for n in shells if a < 2.0 ** n < b})
    s_all, w_all = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        s, w = panel_rule(lo, hi, 1.0, spec)
        s_all.append(s)
        w_all.append(w)
    return np.concatenate(s_all), np.concatenate(w_all)


def _tj_matrix(m, j, d, r, s, spec):
    phi = make_lp_partition().phi
    t = 2.0 ** j
    bps = cutoff_breakpoints(m, phi, t)
    lo = max(0.5, m.support[0] / t)
    hi = min(2.0, m.support[1] / t)
    if lo >= hi:
        return np.zeros((r.size, s.size), dtype=complex)
    piece = Multiplier(lambda x: phi(x) * m(t * x), (lo, hi), bps)
    K = kernel_kab(piece, d, d, t * r, t * s, spec.without_estimate()).values
    return 2.0 ** (j * d) * K


def apply_tj(m, j, f, d, r_grid, support, spec=None):
    """T^j f(r) = int 2^{jd} K_j(2^j r, 2^j s) f(s) s^{d-1} ds."""
    spec = spec or QuadratureSpec(nodes=16, panels_per_oscillation=4.0)
    r = np.asarray(r_grid, dtype=float)
    s, w = _s_rule(support, range(-60, 60), spec)
    K = _tj_matrix(m, j, d, r, s, spec)
    vals = K @ (np.asarray(f(s)) * s ** (d - 1.0) * w)
    return SampledFunction(r, vals, "half_line", meta={"j": j, "d": d})


@dataclass
class DecompositionPieces:
    r: np.ndarray
    H: dict
    S: dict
    E: dict
    direct: np.ndarray
    index_ranges: dict

    def total(self):
        out = np.zeros(self.r.shape, dtype=complex)
        for group in (self.H, self.S, self.E):
            for key in sorted(group):
                out += group[key].values
        return out

    def partition_error(self):
        scale = float(np.max(np.abs(self.direct), initial=0.0)) or 1.0
        return float(np.max(np.abs(self.total() - self.direct)) / scale)


def _shell(x):
    """n with x in [2^n, 2^{n+1}) (half-open so the shells partition (0, inf))."""
    n = np.floor(np.log2(x)).astype(int)
    # guard the rounding of log2 at exact powers of two
    n = np.where(2.0 ** (n + 1) <= x, n + 1, n)
    n = np.where(2.0 ** n > x, n - 1, n)
    return n


def decompose_hse(m, j, f, d, r_grid, support, spec=None, width=5):
    """Split T^j f into H_{j,m}, S_{j,n,i} and E_{j,m} pieces.

    Input shells chi_k f (k = m - j) and output shells chi_n are half-open
    dyadic intervals.  H collects n > k + width, E collects n < k - width,
    S_{j,n,i} is the block n, k = n + i with |i| <= width.  Every
    (n, k) block lands in exactly one piece.
    """
    spec = spec or QuadratureSpec(nodes=16, panels_per_oscillation=4.0)
    r = np.asarray(r_grid, dtype=float)
    if np.any(r <= 0):
        raise InvalidArgumentError("output grid must be positive (shells cover (0, inf))")
    a, b = support
    if not 0 < a < b:
        raise InvalidArgumentError("support must lie in (0, inf)")
    k_lo, k_hi = int(_shell(np.array([a]))[0]), int(_shell(np.array([b]))[0])
    s, w = _s_rule(support, range(k_lo, k_hi + 2), spec)
    K = _tj_matrix(m, j, d, r, s, spec)
    fs = np.asarray(f(s)) * s ** (d - 1.0) * w
    direct = K @ fs
    n_out = _shell(r)
    k_in = _shell(s)
    H, S, E = {}, {}, {}
    for k in range(int(k_in.min()), int(k_in.max()) + 1):
        cols = k_in == k
        if not np.any(cols):
            continue
        col = K[:, cols] @ fs[cols]
        mm = k + j
        for n in range(int(n_out.min()), int(n_out.max()) + 1):
            rows = n_out == n
            if not np.any(rows):
                continue
            piece = np.where(rows, col, 0.0)
            if n > k + width:
                key, group = mm, H
            elif n < k - width:
                key, group = mm, E
            else:
                key, group = (n, k - n), S
            if key in group:
                group[key].values = group[key].values + piece
            else:
                group[key] = SampledFunction(r, piece, "half_line", meta={"j": j})
    ranges = {"k": (int(k_in.min()), int(k_in.max())), "n": (int(n_out.min()), int(n_out.max())),
              "width": width}
    return DecompositionPieces(r, H, S, E, direct, ranges)


# ---------------------------------------------------------------------------
# Hardy-type decay scan

def hardy_theory(d, p):
    """(exponent for m < 0, exponent for m > 0) = (d/p', d(1/p - 1/2) - 1/2)."""
    return d * (1.0 - 1.0 / p), d * (1.0 / p - 0.5) - 0.5


def power_family(d, p):
    """f(s) = d^{1/p} s^{-d/p}, of unit L^{p,inf}(mu_d) quasinorm."""
    c = d ** (1.0 / p)
    return lambda s: c * np.asarray(s, dtype=float) ** (-d / p)


@dataclass
class DecayReport:
    m_values: np.ndarray
    norms: np.ndarray
    normalized: np.ndarray
    exponent_neg: float
    exponent_pos: float
    theory_neg: float
    theory_pos: float
    params: dict

    def to_dict(self):
        return {"m": self.m_values.tolist(), "norms": self.norms.tolist(),
                "normalized": self.normalized.tolist(), "exponent_neg": self.exponent_neg,
                "exponent_pos": self.exponent_pos, "theory_neg": self.theory_neg,
                "theory_pos": self.theory_pos, "params": self.params}


class _PanelInterpolant:
    """Piecewise Chebyshev interpolant (barycentric form) of a smooth function.

    Panels of width ``width`` with n Chebyshev-Lobatto points each; used for
    the inner transform whose oscillation is far slower than the outer one.
    """

    def __init__(self, func, lo, hi, width, n=16):
        self.lo, self.hi = lo, hi
        self.npan = max(1, int(math.ceil((hi - lo) / width)))
        self.h = (hi - lo) / self.npan
        k = np.arange(n)
        self.t = -np.cos(math.pi * k / (n - 1))
        self.bw = (-1.0) ** k
        self.bw[0] *= 0.5
        self.bw[-1] *= 0.5
        x = lo + self.h * (np.arange(self.npan)[:, None] + 0.5 * (self.t[None, :] + 1.0))
        self.vals = np.asarray(func(x.ravel())).reshape(x.shape)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        pan = np.clip(((x - self.lo) / self.h).astype(int), 0, self.npan - 1)
        u = 2.0 * (x - self.lo - pan * self.h) / self.h - 1.0
        diff = u[:, None] - self.t[None, :]
        exact = diff == 0.0
        diff[exact] = 1.0
        c = self.bw[None, :] / diff
        out = np.sum(c * self.vals[pan], axis=1) / np.sum(c, axis=1)
        hit = exact.any(axis=1)
        if np.any(hit):
            out[hit] = self.vals[pan[hit], np.argmax(exact[hit], axis=1)]
        return out


_INNER_SPEC = QuadratureSpec(nodes=16, panels_per_oscillation=2.0, estimate_error=False)


def _outer_integrand(m_mult, d, j, f, k):
    """rho-integrand phi(2^{-j} rho) m(rho) B_d[chi_k f](rho), its support and breakpoints."""
    phi = make_lp_partition().phi
    t = 2.0 ** j
    lo = max(0.5 * t, m_mult.support[0])
    hi = min(2.0 * t, m_mult.support[1])
    if lo >= hi:
        return None, (lo, hi), []
    bps = [t * bp for bp in cutoff_breakpoints(m_mult, phi, t) if lo <= t * bp <= hi]
    s_lo, s_hi = 2.0 ** k, 2.0 ** (k + 1)
    # B_d[chi_k f] oscillates at frequency <= 2^{k+1} in rho
    inner = _PanelInterpolant(
        lambda rho: hankel_eval(d, f, rho, _INNER_SPEC, support=(s_lo, s_hi)),
        lo, hi, min(0.25, TWO_PI / (4.0 * s_hi)))

    def g(rho):
        return phi(rho / t) * m_mult(rho) * inner(rho)

    return g, (lo, hi), bps


def _piece_output(m_mult, d, j, f, k, r, spec):
    """T^j[chi_k f] on r via B_d[phi(2^{-j} .) m B_d[chi_k f]]."""
    g, supp, bps = _outer_integrand(m_mult, d, j, f, k)
    if g is None:
        return np.zeros(r.shape)
    return hankel_eval(d, g, r, spec, support=supp, breakpoints=bps)


def _piece_envelope(m_mult, d, j, f, k, r, spec):
    """2 |Z(r)| where T^j[chi_k f] = 2 Re Z and Z uses the e^{ix} half of B_d's expansion.

    Valid once r * min(rho) is well inside the asymptotic range.
    """
    g, (lo, hi), bps = _outer_integrand(m_mult, d, j, f, k)
    if g is None:
        return np.zeros(r.shape)
    exp = AsymptoticExpansion(d, 0, DEFAULT_M)
    s0 = 0.5 * (d - 1.0)

    def kernel(rho, y):
        x = rho * y
        acc = 0.0
        for nu, c in enumerate(exp.c_plus):
            acc = acc + c * x ** (-(nu + s0))
        return acc * np.exp(1j * x) * rho ** (d - 1.0)

    z, _ = oscillatory_apply(kernel, g, r, lo, hi, spec, bps)
    return 2.0 * np.abs(z)


def _cells_from_grid(r, lo, hi):
    edges = np.concatenate([[lo], np.sqrt(r[1:] * r[:-1]), [hi]])
    return edges


def _window_cells(m_mult, d, j, f, k, r_lo, r_hi, spec, mu, points_per_octave, env_start,
                  phases=64):
    """(values, masses) of |T^j[chi_k f]| on [r_lo, r_hi] for a rearrangement.

    Below ``env_start`` the output is sampled directly (geometric below 1,
    spacing 1/16 above).  Beyond it the output oscillates with period about
    2 pi; each envelope cell is spread over ``phases`` equally likely values
    E |cos theta|, which reproduces the distribution function of the
    oscillating output.
    """
    vals, masses = [], []
    cut = min(max(r_lo, env_start), r_hi)
    if cut > r_lo:
        pts = []
        if r_lo < 1.0:
            top = min(1.0, cut)
            n = max(2, int(math.log2(top / r_lo) * points_per_octave) + 1)
            pts.append(np.geomspace(r_lo, top, n))
        if cut > 1.0:
            start = max(1.0, r_lo)
            pts.append(np.linspace(start, cut, max(2, int((cut - start) * 16) + 1)))
        r = np.unique(np.concatenate(pts))
        out = _piece_output(m_mult, d, j, f, k, r, spec)
        edges = np.concatenate([[r_lo], 0.5 * (r[1:] + r[:-1]), [cut]])
        vals.append(np.abs(out))
        masses.append(np.diff(mu.primitive(edges)))
    if r_hi > cut:
        n = max(2, int(round(math.log2(r_hi / cut) * points_per_octave)) + 1)
        r = np.geomspace(cut, r_hi, n)
        env = _piece_envelope(m_mult, d, j, f, k, r, spec)
        cell = np.diff(mu.primitive(_cells_from_grid(r, cut, r_hi)))
        c = np.abs(np.cos(math.pi * (np.arange(phases) + 0.5) / phases))
        vals.append((env[:, None] * c[None, :]).ravel())
        masses.append(np.repeat(cell / phases, phases))
    return np.concatenate(vals), np.concatenate(masses)


def hardy_scan(m, d, p, q, sigma, j=0, m_range=None, f=None, piece="H", octaves=5,
               points_per_octave=32, r_top_neg=2.0 ** 10, width=5, spec=None, normalize=True):
    """Decay of ||H_{j,m} f||_{L^{q,sigma}(mu_d)} (or E_{j,m}) in m.

    H_{j,m} f keeps the output of T^j[chi_{m-j} f] on r >= 2^{m-j+width+1}.
    For m > 0 the output window is [2^{m-j+width+1}, 2^{m-j+width+1+octaves}]
    so that windows are self-similar in m; for m < 0 the output is a
    scaled copy of a fixed profile and the window ends at ``r_top_neg``.
    Exponents are least-squares log2 slopes on each side: ``exponent_neg``
    is the slope for m < 0, ``exponent_pos`` minus the slope for m > 0, so
    both are positive when the norms decay away from m = 0.
    """
    if not 1 < p < 2.0 * d / (d + 1.0):
        raise PreconditionError("need 1 < p < 2d/(d+1)")
    if m_range is None:
        m_range = list(range(-14, -7)) + list(range(1, 8))
    m_values = np.array(sorted(m_range))
    if (m_values < 0).sum() < 5 or (m_values > 0).sum() < 5:
        raise FitError("need at least 5 m values on each side of 0")
    f = f or power_family(d, p)
    spec = spec or FAST_SPEC
    mu = WeightedMeasure.radial_power(d)
    idx = LorentzIndex(q, sigma)
    norms = []
    for mm in m_values:
        k = int(mm) - j
        if piece == "H":
            r_lo = 2.0 ** (k + width + 1)
            r_hi = r_top_neg if mm < 0 else r_lo * 2.0 ** octaves
        elif piece == "E":
            r_hi = 2.0 ** (k - width)
            r_lo = r_hi * 2.0 ** (-octaves)
        else:
            raise InvalidArgumentError("piece must be 'H' or 'E'")
        env_start = 32.0 / (0.5 * 2.0 ** j)
        cells = _window_cells(m, d, j, f, k, r_lo, r_hi, spec, mu, points_per_octave, env_start)
        norms.append(lorentz_norm(cells, mu, idx))
    norms = np.array(norms)
    scale = 1.0
    if normalize:
        scale = 2.0 ** (j * d * (1.0 / p - 1.0 / q)) * a_j(m, d, q, sigma, j)
    normalized = norms / scale
    logs = np.log2(normalized)
    neg = m_values < 0
    pos = m_values > 0
    slope_neg = float(np.polyfit(m_values[neg], logs[neg], 1)[0])
    slope_pos = float(np.polyfit(m_values[pos], logs[pos], 1)[0])
    tn, tp = hardy_theory(d, p)
    return DecayReport(m_values, norms, normalized, slope_neg, -slope_pos, tn, tp,
                       {"d": d, "p": p, "q": q, "sigma": sigma, "j": j, "piece": piece,
                        "octaves": octaves, "points_per_octave": points_per_octave,
                        "multiplier": getattr(m, "label", "")})


# ---------------------------------------------------------------------------
# transplantation

def transplant_check(g, d, q, chi=None, g_support=None, spec=None, r_max=64.0, h=1.0 / 16,
                     bump=None, r_points=(0.5, 3.0, 10.0), M=6):
    """Both sides of the transplantation inequality and its pointwise form.

    LHS = ||B_1[chi B_d g]||_{L^q((1+r)^{(d-1)(1-q/2)} dr)},
    RHS = ||g||_{L^q(mu_d)}; the pointwise check compares
    |B_1[chi B_d f](r)| with int |f(s)| s^{d-1} (1+|r-s|)^{-M} (1+s)^{-(d-1)/2} ds
    for a bump f at ``r_points``.
    """
    spec = spec or QuadratureSpec(estimate_error=False)
    chi = chi or make_lp_partition().eta
    if g_support is None:
        raise InvalidArgumentError("support of g must be declared")
    lo, hi = chi.support
    # B_d g sampled once on Chebyshev panels over [0, 2 hi]
    s_max = float(g_support[1])
    spectral = _PanelInterpolant(lambda rho: hankel_eval(d, g, rho, spec, support=g_support),
                                 0.0, 2.0 * hi, min(0.25, TWO_PI / (4.0 * s_max)))
    grid = spectral.lo + spectral.h * (np.arange(spectral.npan)[:, None]
                                       + 0.5 * (spectral.t[None, :] + 1.0))
    outside = (grid < lo) | (grid > hi)
    mag = np.abs(spectral.vals)
    leak = float(mag[outside].max() / max(mag[~outside].max(), 1e-300))
    if leak > 1e-6:
        raise PreconditionError(f"spectral content leaks outside supp chi ({leak:.2e})")

    def chi_bdg(rho):
        return chi(rho).real * spectral(rho)

    n = int(round(r_max / h))
    r = h * np.arange(n + 1)
    lhs_vals = np.abs(cosine_transform(chi_bdg, r, spec, support=(lo, hi),
                                        breakpoints=chi.breakpoints).values)
    wts = np.full(r.shape, h)
    wts[0] = wts[-1] = h / 2
    lhs = float(np.sum(lhs_vals ** q * (1 + r) ** ((d - 1) * (1 - q / 2)) * wts)) ** (1 / q)
    s, ws = panel_rule(g_support[0], g_support[1], 1.0, spec)
    rhs = float(np.sum(np.abs(g(s)) ** q * s ** (d - 1) * ws)) ** (1 / q)

    bump = bump or (lambda x: np.where(x < 1, (1 - x * x) ** 5, 0.0))
    b_spec = spec

    def chi_bdf(rho):
        return chi(rho).real * hankel_eval(d, bump, rho, b_spec, support=(0.0, 1.0))

    rp = np.asarray(r_points, dtype=float)
    point_lhs = np.abs(cosine_transform(chi_bdf, rp, spec, support=(lo, hi),
                                         breakpoints=chi.breakpoints).values)
    sb, wb = panel_rule(0.0, 1.0, 1.0, spec)
    point_rhs = np.array([float(np.sum(np.abs(bump(sb)) * sb ** (d - 1) * wb
                                       / (1 + np.abs(x - sb)) ** M
                                       / (1 + sb) ** ((d - 1) / 2))) for x in rp])
    return {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs, "pointwise_ratio": point_lhs / point_rhs,
            "max_pointwise_ratio": float(np.max(point_lhs / point_rhs)), "leakage": leak,
            "d": d, "q": q, "M": M}
