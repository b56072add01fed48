"""Hermite polynomials and functions, polynomial 1F1, Gaussian integrals,
Stirling numbers and semicircle moments.

Everything here is a pure function.  Scalar inputs may be Python numbers,
``fractions.Fraction`` (exact), ``mpmath`` numbers (extended precision) or
numpy arrays (vectorised machine doubles) unless a function says otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Literal

import mpmath
import numpy as np

__all__ = [
    "PrecisionPolicy",
    "MACHINE",
    "HermiteOverflowError",
    "hermite_poly_eval",
    "hermite_poly_coeffs",
    "hermite_fn_eval",
    "hermite_fn_table",
    "hyp1f1",
    "gauss_integral",
    "GAUSS_HALF_LINE",
    "stirling_first_unsigned",
    "semicircle_moment",
    "catalan",
    "double_factorial",
    "to_mpf",
]

GAUSS_HALF_LINE = math.sqrt(math.pi / 2)
_GAUSS_SERIES_CUTOFF = 6.0


class HermiteOverflowError(OverflowError):
    """A Hermite polynomial value left the range of machine doubles."""


@dataclass(frozen=True)
class PrecisionPolicy:
    """Arithmetic mode for the series-based routines.

    ``mode`` is ``"double"`` or ``"extended"``; ``bits`` only matters for the
    latter.  ``series_tolerance`` is the relative stopping threshold of
    non-terminating series.
    """

    mode: Literal["double", "extended"] = "double"
    bits: int = 53
    series_tolerance: float = 1e-17

    def __post_init__(self):
        if self.mode not in ("double", "extended"):
            raise ValueError(f"unknown precision mode {self.mode!r}")
        if self.mode == "extended" and self.bits < 64:
            raise ValueError("extended precision needs at least 64 bits")
        if not (0 < self.series_tolerance <= 1e-6):
            raise ValueError("series_tolerance must lie in (0, 1e-6]")

    def context(self) -> mpmath.ctx_mp.MPContext:
        ctx = mpmath.MPContext()
        ctx.prec = self.bits
        return ctx


MACHINE = PrecisionPolicy()


def to_mpf(value, ctx=mpmath.mp):
    """Convert ints, Fractions and floats to an mpf of ``ctx``."""
    if isinstance(value, Fraction):
        return ctx.mpf(value.numerator) / value.denominator
    return ctx.mpf(value)


def _is_mp(x) -> bool:
    return isinstance(x, (mpmath.mpf, mpmath.mpc))


def double_factorial(n: int) -> int:
    """n!! with the convention (-1)!! = 0!! = 1."""
    if n < -1:
        raise ValueError("double factorial undefined below -1")
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


# --------------------------------------------------------------------------
# Hermite polynomials
# --------------------------------------------------------------------------

def hermite_poly_eval(k: int, x, policy: PrecisionPolicy = MACHINE):
    """Physicists' Hermite polynomial H_k(x) by three-term recurrence.

    Works for exact (int/Fraction), float, complex, mpmath and numpy inputs.
    In machine mode a float result that is not finite raises
    :class:`HermiteOverflowError`.
    """
    if k < 0:
        raise ValueError("Hermite degree must be non-negative")
    h_prev = x * 0 + 1
    if k == 0:
        return h_prev
    h = 2 * x
    for m in range(1, k):
        h_prev, h = h, 2 * x * h - 2 * m * h_prev
    if policy.mode == "double" and not _is_mp(h):
        if isinstance(h, np.ndarray):
            bad = not np.all(np.isfinite(h))
        elif isinstance(h, (float, complex)):
            bad = not np.isfinite(h)
        else:
            bad = False
        if bad:
            raise HermiteOverflowError(f"H_{k} overflows double precision")
    return h


@lru_cache(maxsize=None)
def hermite_poly_coeffs(k: int) -> tuple[int, ...]:
    """Integer monomial coefficients of H_k, lowest degree first."""
    if k == 0:
        return (1,)
    prev, cur = [1], [0, 2]
    for m in range(1, k):
        nxt = [0] * (m + 2)
        for i, c in enumerate(cur):
            nxt[i + 1] += 2 * c
        for i, c in enumerate(prev):
            nxt[i] -= 2 * m * c
        prev, cur = cur, nxt
    return tuple(cur)


# --------------------------------------------------------------------------
# Hermite functions
# --------------------------------------------------------------------------

def _backend(x):
    if _is_mp(x):
        return mpmath.sqrt, mpmath.exp, mpmath.pi
    return np.sqrt, np.exp, math.pi


def hermite_fn_table(kmax: int, x):
    """Return [phi_0(x), ..., phi_kmax(x)] by the normalised recurrence.

    phi_{m+1} = sqrt(2/(m+1)) x phi_m - sqrt(m/(m+1)) phi_{m-1}.
    """
    sqrt, exp, pi = _backend(x)
    if not _is_mp(x):
        x = np.asarray(x, dtype=float)
    phi0 = exp(-x * x / 2) / sqrt(sqrt(pi))
    table = [phi0]
    if kmax == 0:
        return table
    table.append(sqrt(2) * x * phi0)
    for m in range(1, kmax):
        a = sqrt(mpmath.mpf(2) / (m + 1)) if _is_mp(x) else math.sqrt(2.0 / (m + 1))
        b = sqrt(mpmath.mpf(m) / (m + 1)) if _is_mp(x) else math.sqrt(m / (m + 1))
        table.append(a * x * table[m] - b * table[m - 1])
    return table


def hermite_fn_eval(k: int, x, deriv: int = 0):
    """Hermite function phi_k(x) (``deriv=0``) or its first derivative.

    phi_k' = sqrt(k/2) phi_{k-1} - sqrt((k+1)/2) phi_{k+1}.
    """
    if k < 0:
        raise ValueError("Hermite index must be non-negative")
    if deriv not in (0, 1):
        raise ValueError("deriv must be 0 or 1")
    table = hermite_fn_table(k + deriv, x)
    if deriv == 0:
        return table[k]
    sqrt = _backend(x)[0]
    up = sqrt(mpmath.mpf(k + 1) / 2) if _is_mp(x) else math.sqrt((k + 1) / 2)
    out = -up * table[k + 1]
    if k > 0:
        down = sqrt(mpmath.mpf(k) / 2) if _is_mp(x) else math.sqrt(k / 2)
        out = out + down * table[k - 1]
    return out


# --------------------------------------------------------------------------
# Confluent hypergeometric function
# --------------------------------------------------------------------------

def _as_nonpositive_int(a):
    if isinstance(a, (int, Fraction)) or (isinstance(a, float) and a.is_integer()):
        if a <= 0 and Fraction(a).denominator == 1:
            return int(a)
    if _is_mp(a) and a == int(a) and a <= 0:
        return int(a)
    return None


def _coerce(coef: Fraction, x):
    if _is_mp(x):
        return mpmath.mpf(coef.numerator) / coef.denominator
    if isinstance(x, (int, Fraction)):
        return coef
    return float(coef)


def hyp1f1(a, b, x, policy: PrecisionPolicy = MACHINE):
    """Kummer's confluent hypergeometric function 1F1(a; b; x).

    For a in {0, -1, -2, ...} the exact finite sum is returned (exact when
    ``x`` is rational).  Otherwise the series is summed until three
    consecutive terms fall below ``series_tolerance`` relative to the
    partial sum.
    """
    if policy.mode == "extended":
        with mpmath.workprec(policy.bits):
            exact = all(isinstance(v, (int, Fraction)) for v in (a, b, x))
            if exact:
                return _hyp1f1(a, b, x, policy)
            a, b, x = (to_mpf(v) if not isinstance(v, (mpmath.mpf, mpmath.mpc)) else +v for v in (a, b, x))
            return _hyp1f1(a, b, x, policy)
    return _hyp1f1(a, b, x, policy)


def _hyp1f1(a, b, x, policy: PrecisionPolicy):
    m = _as_nonpositive_int(a)
    b_int = _as_nonpositive_int(b)
    if m is not None:
        if b_int is not None and b_int > m:
            # the pole term (b)_j = 0 appears at j = 1 - b_int <= -m
            raise ZeroDivisionError("1F1 denominator vanishes before the series terminates")
        if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
            coef = Fraction(1)
            total = _coerce(coef, x) * (x * 0 + 1)
            xp = x * 0 + 1
            for j in range(-m):
                coef = coef * (Fraction(a) + j) / ((Fraction(b) + j) * (j + 1))
                xp = xp * x
                total = total + _coerce(coef, x) * xp
            return total
        term = x * 0 + 1
        total = term
        for j in range(-m):
            term = term * (a + j) / (b + j) * x / (j + 1)
            total = total + term
        return total
    if b_int is not None:
        raise ValueError("1F1 undefined: b is a non-positive integer")
    tol = policy.series_tolerance
    term = x * 0 + 1
    total = term
    quiet = 0
    j = 0
    while quiet < 3:
        term = term * (a + j) / (b + j) * x / (j + 1)
        total = total + term
        j += 1
        if abs(term) < tol * abs(total):
            quiet += 1
        else:
            quiet = 0
        if j > 100000:
            raise RuntimeError("1F1 series failed to converge")
    return total


# --------------------------------------------------------------------------
# Gaussian integral  G(x) = int_0^x exp(-t^2/2) dt
# --------------------------------------------------------------------------

def _gauss_series_np(x: np.ndarray) -> np.ndarray:
    # exp(-x^2/2) * sum x^(2k+1) / (2k+1)!!  -- all terms positive
    term = x.copy()
    total = x.copy()
    x2 = x * x
    k = 0
    while True:
        k += 1
        term = term * x2 / (2 * k + 1)
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return np.exp(-x2 / 2) * total


def _gauss_tail_np(x: np.ndarray) -> np.ndarray:
    # asymptotic int_x^inf exp(-t^2/2) dt, x > 6
    x2 = x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 17):
        term = -term * (2 * k - 1) / x2
        total = total + term
    return np.exp(-x2 / 2) / x * total


def gauss_integral(x, policy: PrecisionPolicy = MACHINE):
    """Integral of exp(-t^2/2) from 0 to x; odd in x, saturates at sqrt(pi/2).

    ``x`` may be ``math.inf``.  Machine mode uses a positive-term series on
    |x| <= 6 and the saturation value minus its asymptotic tail beyond.
    """
    if _is_mp(x) or policy.mode == "extended":
        ctx = policy.context() if policy.mode == "extended" else mpmath.mp
        xv = to_mpf(x, ctx) if not _is_mp(x) else x
        if ctx.isinf(xv):
            return ctx.sign(xv) * ctx.sqrt(ctx.pi / 2)
        x2 = xv * xv
        term = xv
        total = xv
        k = 0
        eps = ctx.mpf(2) ** (-ctx.prec - 4)
        while True:
            k += 1
            term = term * x2 / (2 * k + 1)
            total += term
            if abs(term) <= eps * abs(total):
                break
        return ctx.exp(-x2 / 2) * total
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    ax = np.abs(xa)
    out = np.empty_like(xa)
    inner = ax <= _GAUSS_SERIES_CUTOFF
    if np.any(inner):
        out[inner] = _gauss_series_np(ax[inner])
    outer = ~inner
    if np.any(outer):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            tail = _gauss_tail_np(ax[outer])
        tail[~np.isfinite(tail)] = 0.0
        out[outer] = GAUSS_HALF_LINE - tail
    out = np.sign(xa) * out
    return float(out[0]) if scalar else out


# --------------------------------------------------------------------------
# Combinatorial numbers
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _stirling_row(n: int) -> tuple[int, ...]:
    row = [1]
    for m in range(n):
        # multiply by (x + m)
        nxt = [0] * (len(row) + 1)
        for k, c in enumerate(row):
            nxt[k + 1] += c
            nxt[k] += m * c
        row = nxt
    return tuple(row)


def stirling_first_unsigned(n: int, k: int) -> int:
    """Unsigned Stirling number of the first kind [n, k].

    The coefficient of x^k in the rising factorial x(x+1)...(x+n-1).
    """
    if n < 0 or k < 0:
        raise ValueError("Stirling numbers need non-negative arguments")
    if k > n:
        return 0
    return _stirling_row(n)[k]


def catalan(m: int) -> int:
    return math.comb(2 * m, m) // (m + 1)


def semicircle_moment(m: int) -> Fraction:
    """m-th moment of the semicircle law sqrt(4 - t^2)/(2 pi) on [-2, 2]."""
    if m < 0:
        raise ValueError("moment order must be non-negative")
    if m % 2:
        return Fraction(0)
    return Fraction(catalan(m // 2))
