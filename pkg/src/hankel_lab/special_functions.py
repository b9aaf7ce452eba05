"""Bessel functions, the kernels B_d and their large-argument expansion.

The kernel of the Fourier-Bessel transform is

    B_d(x) = x^{-(d-2)/2} J_{(d-2)/2}(x),   B_d(0) = 2^{-(d-2)/2} / Gamma(d/2).

Evaluation is hybrid: the power series below the crossover point
``max(15, 2*nu)`` and Hankel's asymptotic expansion above it.  The series
is summed in the reduced form sum_k (-x^2/4)^k / (k! Gamma(k+nu+1)), which
has no singular power of x, so B_d is evaluated directly even for d < 2.
"""

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import (
    InvalidArgumentError,
    OutOfDomainError,
    UnsupportedDerivativeError,
    UnsupportedOrderError,
)

DEFAULT_TOL = 1e-9
DEFAULT_M = 4
MAX_DERIVATIVE = 4

__all__ = [
    "BesselEval",
    "AsymptoticExpansion",
    "bessel_j",
    "b_kernel",
    "b_kernel_deriv",
    "b_asymptotic",
    "asymptotic_expansion",
    "crossover",
]


class BesselEval:
    """Configuration of a Bessel evaluation: order, method and tolerance."""

    def __init__(self, order, method="hybrid", target_tol=DEFAULT_TOL):
        if method not in ("series", "asymptotic", "hybrid"):
            raise InvalidArgumentError(f"unknown method {method!r}")
        _check_order(order)
        if not target_tol > 0:
            raise InvalidArgumentError("target_tol must be positive")
        self.order = float(order)
        self.method = method
        self.target_tol = float(target_tol)

    def __call__(self, x):
        return bessel_j(self.order, x, method=self.method)


def crossover(nu):
    return max(15.0, 2.0 * nu)


def _check_order(nu):
    if not np.isfinite(nu):
        raise InvalidArgumentError("order must be finite")
    if nu < -0.5:
        raise UnsupportedOrderError(f"order {nu} < -1/2 is not supported")


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("non-finite argument")
    if np.any(arr < 0):
        raise OutOfDomainError("argument must be non-negative")
    return arr


# ---------------------------------------------------------------------------
# power series

def _reduced_series(nu, x):
    """sum_k (-x^2/4)^k / (k! Gamma(k+nu+1))."""
    shape = x.shape
    flat = x.ravel()
    out = np.empty_like(flat)
    # bin by magnitude so small arguments stop after a few terms
    edges = (0.0, 1.0, 3.0, 6.0, 8.0, 10.0, np.inf)
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (flat >= lo) & (flat < hi)
        if np.any(sel):
            out[sel] = _reduced_series_bin(nu, flat[sel], extended=lo >= 8.0)
    return out.reshape(shape)


def _reduced_series_bin(nu, x, extended=False):
    z = -0.25 * x * x
    zmax = float(np.max(-z))
    # peak terms grow like e^x / x: below x = 8 double loses < 1e-13, up to
    # x = 15 it would lose ~1e-11, so the upper bins accumulate in long double
    dtype = np.longdouble if extended else np.float64
    z = z.astype(dtype)
    term = np.full(z.shape, 1.0 / math.gamma(nu + 1.0), dtype=dtype)
    total = term.copy()
    # small enough for B_d and, after the factor (x/2)^nu, for J_nu
    with np.errstate(divide="ignore", over="ignore"):
        cutoff = np.minimum(1e-24, 1e-18 * np.power(0.5 * x, -nu))
    for k in range(1, 400):
        term = term * z / (k * (k + nu))
        total += term
        # past the peak term and negligible
        if k * k > zmax and np.all(np.abs(term) < cutoff):
            break
    return total.astype(np.float64)


def _reduced_series_exact(nu, x):
    """Reduced series summed in exact rational arithmetic (scalar x)."""
    nu_f = Fraction(nu)
    z = -Fraction(x) ** 2 / 4
    term = Fraction(1)
    total = Fraction(1)
    k = 0
    while True:
        k += 1
        term = term * z / (k * (k + nu_f))
        total += term
        if k > abs(x) + 5 and abs(term) < Fraction(1, 10 ** 30):
            break
    return float(total) / math.gamma(nu + 1.0)


# ---------------------------------------------------------------------------
# Hankel asymptotic expansion

def _hankel_coeffs(nu, kmax):
    """a_k(nu) = prod_{j=1}^k (4 nu^2 - (2j-1)^2) / (k! 8^k)."""
    mu = 4.0 * nu * nu
    a = [1.0]
    for k in range(1, kmax + 1):
        a.append(a[-1] * (mu - (2 * k - 1) ** 2) / (8.0 * k))
    return a


def _hankel_pq(nu, x):
    """P and Q of Hankel's expansion, truncated adaptively at the smallest term."""
    kmax = 80
    a = _hankel_coeffs(nu, kmax)
    shape = x.shape
    x = x.ravel()
    P = np.ones_like(x)
    Q = np.zeros_like(x)
    idx = np.arange(x.size)
    inv = 1.0 / x
    power = np.ones_like(x)
    prev = np.full(x.shape, np.inf)
    for k in range(1, kmax + 1):
        if a[k] == 0.0 or idx.size == 0:
            break
        power = power * inv
        term = a[k] * power
        mag = np.abs(term)
        keep = mag < prev
        if not np.all(keep):
            idx, inv, power, term, mag = idx[keep], inv[keep], power[keep], term[keep], mag[keep]
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            P[idx] += sign * term
        else:
            Q[idx] += sign * term
        small = mag > 1e-18
        if not np.all(small):
            idx, inv, power, mag = idx[small], inv[small], power[small], mag[small]
        prev = mag
    return P.reshape(shape), Q.reshape(shape)


def _j_asymptotic(nu, x):
    P, Q = _hankel_pq(nu, x)
    w = x - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (P * np.cos(w) - Q * np.sin(w))


# Hankel's expansion reaches ~1e-12 from x = 15 only for orders up to about 8
_ASYMPTOTIC_MAX_ORDER = 8.0


def _j_upward(nu, x):
    """J_nu for x >= 2 nu: upward recurrence from the fractional base order.

    Stable because every order in the recurrence stays below x.
    """
    n = int(math.floor(nu))
    nu0 = nu - n
    prev = _j_asymptotic(nu0, x)
    if n == 0:
        return prev
    cur = _j_asymptotic(nu0 + 1.0, x)
    for k in range(1, n):
        prev, cur = cur, (2.0 * (nu0 + k) / x) * cur - prev
    return cur


def _j_miller(nu, x):
    """J_nu for 15 <= x < 2 nu by Miller's backward recurrence.

    The unnormalized sequence is fitted to J_{nu0} and J_{nu0+1} (nu0 the
    fractional part of nu) from Hankel's expansion, which is accurate for
    x >= 15 at such small orders and never vanishes at both orders at once.
    """
    n = int(math.floor(nu))
    nu0 = nu - n
    top = n + int(math.ceil(float(np.max(x)) + 10.0 * float(np.max(x)) ** (1.0 / 3.0) + 30.0))
    nxt = np.zeros_like(x)
    cur = np.full(x.shape, 1e-300)
    at_nu = np.zeros_like(x)
    f1 = np.zeros_like(x)
    for k in range(top, 0, -1):
        if k == n:
            at_nu = cur.copy()
        if k == 1:
            f1 = cur.copy()
        prev = (2.0 * (nu0 + k) / x) * cur - nxt
        nxt, cur = cur, prev
        big = np.abs(cur) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            cur, nxt, at_nu, f1 = cur * scale, nxt * scale, at_nu * scale, f1 * scale
    if n == 0:
        at_nu = cur
    f0 = cur
    size = np.maximum(np.abs(f0), np.abs(f1))
    f0, f1, at_nu = f0 / size, f1 / size, at_nu / size
    j0 = _j_asymptotic(nu0, x)
    j1 = _j_asymptotic(nu0 + 1.0, x)
    c = (f0 * j0 + f1 * j1) / (f0 * f0 + f1 * f1)
    return c * at_nu


def _j_large(nu, x):
    """J_nu for x >= 15 when the order is too large for the expansion."""
    out = np.empty_like(x)
    up = x >= 2.0 * nu
    if np.any(up):
        out[up] = _j_upward(nu, x[up])
    if np.any(~up):
        out[~up] = _j_miller(nu, x[~up])
    return out


# ---------------------------------------------------------------------------
# public evaluators

def bessel_j(nu, x, method="hybrid"):
    """Bessel function of the first kind J_nu(x) for nu >= -1/2, x >= 0.

    Parameters
    ----------
    nu : float
        Order, at least -1/2.
    x : float or array_like
        Non-negative arguments.
    method : {"hybrid", "series", "asymptotic"}
        ``series`` sums the power series exactly in rational arithmetic
        (slow, used for cross-checks); ``asymptotic`` uses Hankel's
        expansion everywhere (only accurate for large x); ``hybrid``
        switches at ``crossover(nu)``.

    Returns
    -------
    float or ndarray
    """
    _check_order(nu)
    arr = _as_array(x)
    scalar = arr.ndim == 0
    xa = np.atleast_1d(arr)
    if nu < 0 and np.any(xa == 0):
        raise OutOfDomainError("J_nu(0) is infinite for nu < 0")
    out = np.empty_like(xa)
    if method == "series":
        red = np.array([_reduced_series_exact(nu, float(v)) for v in xa.ravel()]).reshape(xa.shape)
        out = np.power(0.5 * xa, nu) * red
    elif method == "asymptotic":
        if np.any(xa == 0):
            raise OutOfDomainError("asymptotic branch needs x > 0")
        out = _j_asymptotic(nu, xa)
    elif method == "hybrid":
        large = nu > _ASYMPTOTIC_MAX_ORDER
        # large orders leave the series at 15, where it still has full accuracy
        lo = xa < (15.0 if large else crossover(nu))
        if np.any(lo):
            xl = xa[lo]
            out[lo] = np.power(0.5 * xl, nu) * _reduced_series(nu, xl)
        if np.any(~lo):
            xh = xa[~lo]
            out[~lo] = _j_large(nu, xh) if large else _j_asymptotic(nu, xh)
    else:
        raise InvalidArgumentError(f"unknown method {method!r}")
    return float(out[0]) if scalar else out


def b_kernel(d, x, method="hybrid"):
    """The kernel B_d(x) = x^{-(d-2)/2} J_{(d-2)/2}(x), d >= 1.

    B_d is even in x; negative arguments are not accepted here, callers
    pass |x|.  At x = 0 the analytic limit 2^{-(d-2)/2}/Gamma(d/2) is
    returned.
    """
    if not np.isfinite(d):
        raise InvalidArgumentError("d must be finite")
    if d < 1:
        raise UnsupportedOrderError(f"d = {d} < 1 is not supported")
    nu = 0.5 * (d - 2.0)
    arr = _as_array(x)
    scalar = arr.ndim == 0
    xa = np.atleast_1d(arr)
    if method == "series":
        out = np.array([_reduced_series_exact(nu, float(v)) for v in xa.ravel()]).reshape(xa.shape)
        out = out * 2.0 ** (-nu)
    elif method == "asymptotic":
        if np.any(xa == 0):
            raise OutOfDomainError("asymptotic branch needs x > 0")
        out = np.power(xa, -nu) * _j_asymptotic(nu, xa)
    else:
        out = np.empty_like(xa)
        lo = xa < crossover(nu)
        if np.any(lo):
            out[lo] = 2.0 ** (-nu) * _reduced_series(nu, xa[lo])
        if np.any(~lo):
            xh = xa[~lo]
            out[~lo] = np.power(xh, -nu) * _j_asymptotic(nu, xh)
    return float(out[0]) if scalar else out


@lru_cache(maxsize=None)
def _derivative_terms(k):
    """B_d^{(k)} as sum of c * x^p * B_{d+2s}: returns tuple of (c, p, s).

    Uses B_d'(x) = -x B_{d+2}(x), i.e. (x^{-nu} J_nu)' = -x^{-nu} J_{nu+1}.
    """
    terms = {(0, 0): 1.0}
    for _ in range(k):
        new = {}
        for (p, s), c in terms.items():
            if p:
                new[(p - 1, s)] = new.get((p - 1, s), 0.0) + c * p
            new[(p + 1, s + 1)] = new.get((p + 1, s + 1), 0.0) - c
        terms = new
    return tuple((c, p, s) for (p, s), c in sorted(terms.items()) if c != 0.0)


def b_kernel_deriv(d, k, x):
    """k-th derivative of B_d, built from the shift identity B_d' = -x B_{d+2}.

    Parameters
    ----------
    d : float
        Dimension parameter, d >= 1.
    k : int
        Derivative order, 0 <= k <= 4.
    x : float or array_like
        Positive arguments.
    """
    if k < 0 or k > MAX_DERIVATIVE or int(k) != k:
        raise UnsupportedDerivativeError(f"derivative order {k} not in 0..{MAX_DERIVATIVE}")
    if d < 1:
        raise UnsupportedOrderError(f"d = {d} < 1 is not supported")
    arr = _as_array(x)
    scalar = arr.ndim == 0
    xa = np.atleast_1d(arr)
    out = np.zeros_like(xa)
    for c, p, s in _derivative_terms(int(k)):
        out += c * xa ** p * b_kernel(d + 2 * s, xa)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# expansion B_d^{(k)}(x) = sum_nu (c+ e^{ix} + c- e^{-ix}) x^{-nu-(d-1)/2} + x^{-M} E

class AsymptoticExpansion:
    """Coefficients c^+_{nu,k,d} (nu = 0..M) and a calibrated remainder envelope.

    ``c_plus[nu]`` multiplies e^{ix} x^{-nu-(d-1)/2}; c^- is its complex
    conjugate because B_d is real.  The remainder envelope is C * x^{-M}
    with C fitted on [10, 100] against direct evaluation (times a safety
    factor of 2).
    """

    def __init__(self, d, k=0, M=DEFAULT_M):
        if M < 1:
            raise InvalidArgumentError("M must be >= 1")
        if k < 0 or k > MAX_DERIVATIVE:
            raise UnsupportedDerivativeError(f"derivative order {k} not in 0..{MAX_DERIVATIVE}")
        self.d = float(d)
        self.k = int(k)
        self.M = int(M)
        self.c_plus = _expansion_coeffs(self.d, self.k, self.M)
        self.c_minus = np.conj(self.c_plus)
        self.remainder_constant = _calibrate_remainder(self.d, self.k, self.M)

    def leading(self):
        return self.c_plus[0], self.c_minus[0]

    def value(self, x):
        x = np.asarray(x, dtype=float)
        s0 = 0.5 * (self.d - 1.0)
        e = np.exp(1j * x)
        acc = np.zeros(x.shape, dtype=complex)
        for nu in range(self.M + 1):
            acc += self.c_plus[nu] * np.power(x, -(nu + s0))
        return 2.0 * np.real(acc * e)

    def remainder_envelope(self, x):
        return self.remainder_constant * np.power(np.asarray(x, dtype=float), -self.M)


@lru_cache(maxsize=None)
def _expansion_coeffs_cached(d, k, M):
    nu_order = 0.5 * (d - 2.0)
    a = _hankel_coeffs(nu_order, M + k)
    lead = (2.0 * math.pi) ** -0.5 * np.exp(-0.25j * (d - 1.0) * math.pi)
    c = np.array([lead * (1j ** n) * a[n] for n in range(M + k + 1)], dtype=complex)
    s0 = 0.5 * (d - 1.0)
    for _ in range(k):
        new = 1j * c
        new[1:] -= (np.arange(len(c) - 1) + s0) * c[:-1]
        c = new
    return tuple(c[: M + 1])


def _expansion_coeffs(d, k, M):
    return np.array(_expansion_coeffs_cached(float(d), int(k), int(M)), dtype=complex)


@lru_cache(maxsize=None)
def _calibrate_remainder(d, k, M):
    xs = np.linspace(10.0, 100.0, 901)
    exact = b_kernel_deriv(d, k, xs)
    c = np.array(_expansion_coeffs_cached(d, k, M))
    s0 = 0.5 * (d - 1.0)
    approx = np.zeros(xs.shape, dtype=complex)
    for nu in range(M + 1):
        approx += c[nu] * xs ** -(nu + s0)
    approx = 2.0 * np.real(approx * np.exp(1j * xs))
    ratio = np.abs(exact - approx) * xs ** M
    return float(2.0 * np.max(ratio)) + 1e-300


def asymptotic_expansion(d, k=0, M=DEFAULT_M):
    return AsymptoticExpansion(d, k, M)


def b_asymptotic(d, k, M, x):
    """Truncated expansion of B_d^{(k)} and its remainder bound.

    Returns
    -------
    value : float or ndarray
        sum_{nu=0}^{M} (c+ e^{ix} + c- e^{-ix}) x^{-nu-(d-1)/2}.
    remainder_bound : float or ndarray
        C(M, k, d) x^{-M} with C calibrated on [10, 100].
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("non-finite argument")
    if np.any(arr < 1):
        raise OutOfDomainError("expansion is only used for x >= 1")
    exp = AsymptoticExpansion(d, k, M)
    val = exp.value(arr)
    rem = exp.remainder_envelope(arr)
    if arr.ndim == 0:
        return float(val), float(rem)
    return val, rem
