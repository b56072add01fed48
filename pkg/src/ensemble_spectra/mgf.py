"""Moment generating functions (bilateral Laplace transforms) of the
Gaussian-ensemble densities.

Two independent routes are provided:

* :func:`mgf_eval` evaluates the closed formulas numerically (complex
  arithmetic for the GOE even-n Hermite sum), in either the literal
  ``"as_printed"`` variant or the ``"mass_consistent"`` one.
* :class:`MGFForm` holds the same function exactly as a finite sum of
  ``exp(a s^2) * P(s) [* Gs(s)]`` terms with rational data, where
  ``Gs(s) = int_0^s exp(-sigma2 t^2 / 2) dt``.  It is closed under
  differentiation and expands into exact Taylor series, which gives the
  moments and the ODE residuals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Literal, Sequence

import mpmath
import numpy as np

from .poly import Poly
from .specialfn import (
    double_factorial,
    gauss_integral,
    hermite_poly_coeffs,
    hermite_poly_eval,
    hyp1f1,
    stirling_first_unsigned,
)

__all__ = [
    "MGFConvention",
    "ConventionError",
    "PowerSeriesInS",
    "ExpPolyTerm",
    "MGFForm",
    "as_fraction",
    "mgf_form",
    "mgf_eval",
    "mgf_ode_residual",
    "mgf_ode_residual_form",
    "moments_from_mgf",
    "two_hermite_laplace",
    "a_series_value",
    "a_series_recurrence_residual",
    "gse_second_term",
    "gse_second_term_1n",
    "mgf_expansion_1n",
]

Convention = Literal["as_printed", "mass_consistent"]


class ConventionError(ValueError):
    """The mass-consistent variant failed its s = 0 self-check."""


@dataclass(frozen=True)
class MGFConvention:
    variant: Convention = "mass_consistent"

    def __post_init__(self):
        if self.variant not in ("as_printed", "mass_consistent"):
            raise ValueError(f"unknown MGF convention {self.variant!r}")


def as_fraction(value) -> Fraction:
    """Exact rational from int/Fraction/str; floats go through their repr."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


# --------------------------------------------------------------------------
# truncated power series in s
# --------------------------------------------------------------------------

class PowerSeriesInS:
    """Taylor coefficients at s = 0, truncated after ``order``."""

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs: Sequence, order: int):
        c = list(coeffs)[: order + 1]
        c += [Fraction(0)] * (order + 1 - len(c))
        self.coeffs = tuple(c)
        self.order = order

    @classmethod
    def exp_quadratic(cls, a, order: int) -> "PowerSeriesInS":
        """exp(a s^2)."""
        a = as_fraction(a)
        c = [Fraction(0)] * (order + 1)
        term = Fraction(1)
        for k in range(order // 2 + 1):
            c[2 * k] = term
            term = term * a / (k + 1)
        return cls(c, order)

    @classmethod
    def gauss(cls, sigma2, order: int) -> "PowerSeriesInS":
        """int_0^s exp(-sigma2 t^2 / 2) dt."""
        s2 = as_fraction(sigma2)
        c = [Fraction(0)] * (order + 1)
        for k in range((order - 1) // 2 + 1):
            c[2 * k + 1] = (-s2 / 2) ** k / (math.factorial(k) * (2 * k + 1))
        return cls(c, order)

    @classmethod
    def from_poly(cls, p: Poly, order: int) -> "PowerSeriesInS":
        return cls(list(p.coeffs), order)

    def __add__(self, other: "PowerSeriesInS") -> "PowerSeriesInS":
        order = min(self.order, other.order)
        return PowerSeriesInS([a + b for a, b in zip(self.coeffs, other.coeffs)], order)

    def __neg__(self):
        return PowerSeriesInS([-c for c in self.coeffs], self.order)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, PowerSeriesInS):
            return PowerSeriesInS([c * other for c in self.coeffs], self.order)
        order = min(self.order, other.order)
        out = [Fraction(0)] * (order + 1)
        for i, a in enumerate(self.coeffs[: order + 1]):
            if a == 0:
                continue
            for j in range(order + 1 - i):
                out[i + j] += a * other.coeffs[j]
        return PowerSeriesInS(out, order)

    __rmul__ = __mul__

    def moments(self) -> list:
        """m_k = k! [s^k]."""
        return [math.factorial(k) * c for k, c in enumerate(self.coeffs)]

    def __repr__(self):
        return f"PowerSeriesInS(order={self.order}, coeffs={list(self.coeffs)[:6]}...)"


# --------------------------------------------------------------------------
# exact exp-polynomial representation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpPolyTerm:
    """exp(a s^2) * poly(s) * (Gs(s) if gauss else 1)."""

    a: Fraction
    poly: Poly
    gauss: bool = False


@dataclass(frozen=True)
class MGFForm:
    sigma2: Fraction
    terms: tuple[ExpPolyTerm, ...] = field(default_factory=tuple)

    @classmethod
    def build(cls, sigma2, terms) -> "MGFForm":
        merged: dict[tuple[Fraction, bool], Poly] = {}
        for t in terms:
            key = (as_fraction(t.a), t.gauss)
            merged[key] = merged.get(key, Poly()) + t.poly
        kept = tuple(ExpPolyTerm(a, p, g) for (a, g), p in merged.items() if p)
        return cls(as_fraction(sigma2), kept)

    def __add__(self, other: "MGFForm") -> "MGFForm":
        return MGFForm.build(self.sigma2, self.terms + other.terms)

    def __mul__(self, scalar) -> "MGFForm":
        scalar = as_fraction(scalar) if not isinstance(scalar, Poly) else scalar
        return MGFForm.build(self.sigma2, [ExpPolyTerm(t.a, t.poly * scalar, t.gauss) for t in self.terms])

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def times_poly(self, p: Poly) -> "MGFForm":
        return MGFForm.build(self.sigma2, [ExpPolyTerm(t.a, t.poly * p, t.gauss) for t in self.terms])

    def deriv(self) -> "MGFForm":
        s = Poly.x()
        out = []
        for t in self.terms:
            out.append(ExpPolyTerm(t.a, s * t.poly * (2 * t.a) + t.poly.deriv(), t.gauss))
            if t.gauss:
                out.append(ExpPolyTerm(t.a - self.sigma2 / 2, t.poly, False))
        return MGFForm.build(self.sigma2, out)

    def is_zero(self) -> bool:
        return not self.terms

    def __call__(self, s) -> float:
        """Numerical value; polynomial parts are summed exactly."""
        s_exact = as_fraction(float(s))
        total = 0.0
        for t in self.terms:
            val = float(t.poly(s_exact)) * math.exp(float(t.a) * float(s) ** 2)
            if t.gauss:
                sig = math.sqrt(float(self.sigma2))
                val *= gauss_integral(sig * float(s)) / sig
            total += val
        return total

    def series(self, order: int) -> PowerSeriesInS:
        total = PowerSeriesInS([], order)
        gs = PowerSeriesInS.gauss(self.sigma2, order)
        for t in self.terms:
            piece = PowerSeriesInS.exp_quadratic(t.a, order) * PowerSeriesInS.from_poly(t.poly, order)
            if t.gauss:
                piece = piece * gs
            total = total + piece
        return total


def _hyp_poly(m: int, b, scale: Fraction) -> Poly:
    """1F1(-m; b; scale * s^2) as an exact polynomial in s."""
    b = as_fraction(b)
    coeffs = [Fraction(0)] * (2 * m + 1)
    coef = Fraction(1)
    for j in range(m + 1):
        coeffs[2 * j] = coef * scale**j
        coef = coef * (j - m) / ((b + j) * (j + 1))
    return Poly(coeffs)


def _gue_form(n: int, s2: Fraction) -> MGFForm:
    return MGFForm.build(s2, [ExpPolyTerm(s2 / 2, _hyp_poly(n - 1, 2, -s2) * n)])


def _support_sum(N: int, s2: Fraction) -> Poly:
    """sum_i (sigma s)^{2i} (N-1)!!/((2i)! (N-1-2i)!!) 1F1(-(N-1-2i); 1+2i; -sigma^2 s^2)."""
    out = Poly()
    for i in range((N - 1) // 2 + 1):
        c = Fraction(double_factorial(N - 1), math.factorial(2 * i) * double_factorial(N - 1 - 2 * i))
        out = out + Poly.monomial(2 * i, c * s2**i) * _hyp_poly(N - 1 - 2 * i, 1 + 2 * i, -s2)
    return out


def _hermite_pair_sum(n: int, s2: Fraction) -> Poly:
    """sum_{j=1}^{n-1} C(n-1,j) (-i)^{n-1-j} H_{n-1-j}(i sqrt2 sigma s) H_{j-1}(-sigma s / sqrt2).

    Real and rational in sigma^2 for even n; expanded exactly.
    """
    assert n % 2 == 0
    out: dict[int, Fraction] = {}
    for j in range(1, n):
        m = n - 1 - j
        hm = hermite_poly_coeffs(m)
        hj = hermite_poly_coeffs(j - 1)
        binom = math.comb(n - 1, j)
        for r, cr in enumerate(hm):
            if cr == 0:
                continue
            for t, ct in enumerate(hj):
                if ct == 0:
                    continue
                # (-i)^m i^r = i^(r-m); r - m even
                sign = (-1) ** ((m - r) // 2) * (-1) ** t
                power = r + t
                assert power % 2 == 0 and (r - t) % 2 == 0
                val = Fraction(binom * cr * ct * sign) * Fraction(2) ** ((r - t) // 2) * s2 ** (power // 2)
                out[power] = out.get(power, Fraction(0)) + val
    deg = max(out) if out else 0
    return Poly([out.get(k, Fraction(0)) for k in range(deg + 1)])


def gse_second_term(n: int, sigma2) -> MGFForm:
    """exp(u/2) sum_i (u^i 2^i n!/((2i)!(n-i)!)) 1F1(-(2n-2i); 1+2i; -u), u = sigma^2 s^2."""
    s2 = as_fraction(sigma2)
    total = Poly()
    for i in range(n + 1):
        c = Fraction(2**i * math.factorial(n), math.factorial(2 * i) * math.factorial(n - i))
        total = total + Poly.monomial(2 * i, c * s2**i) * _hyp_poly(2 * n - 2 * i, 1 + 2 * i, -s2)
    return MGFForm.build(s2, [ExpPolyTerm(s2 / 2, total)])


def mgf_form(kind: str, n: int, sigma2, convention: Convention = "mass_consistent") -> MGFForm:
    """Exact exp-polynomial form of the mean-count MGF.

    GUE is the same in both conventions.  ``as_printed`` is available for GSE
    (its data are rational); for GOE only the mass-consistent form is exact
    in sigma^2.
    """
    s2 = as_fraction(sigma2)
    if kind == "GUE":
        return _gue_form(n, s2)
    if kind == "GSE":
        second = gse_second_term(n, s2)
        if convention == "as_printed":
            return _gue_form(n, s2) - second
        return (_gue_form(2 * n + 1, s2) - second) * Fraction(1, 2)
    if kind != "GOE":
        raise ValueError(f"unknown ensemble {kind!r}")
    if convention != "mass_consistent":
        raise ValueError("the exact GOE form exists only in the mass-consistent variant")
    terms = list(_gue_form(n, s2).terms)
    if n % 2:
        terms.append(ExpPolyTerm(s2, _hyp_poly((n - 1) // 2, Fraction(1, 2), -2 * s2)))
    terms.append(ExpPolyTerm(s2 / 2, -_support_sum(n, s2)))
    if n % 2 == 0:
        k = n // 2
        pref = Fraction(double_factorial(n - 1), 2**k * math.factorial(n - 1))
        first = (
            Poly.monomial(1, 4 * s2 * Fraction(math.factorial(n - 1), math.factorial(k - 1)))
            * _hyp_poly(k - 1, Fraction(3, 2), -2 * s2)
        )
        terms.append(ExpPolyTerm(s2, first * pref, gauss=True))
        terms.append(ExpPolyTerm(s2 / 2, _hermite_pair_sum(n, s2) * (2 * pref)))
    return MGFForm.build(s2, terms)


# --------------------------------------------------------------------------
# direct numerical evaluation of the closed formulas
# --------------------------------------------------------------------------

def _gue_value(n, s2, s):
    u = s2 * s * s
    return n * math.exp(u / 2) * hyp1f1(1 - n, 2, -u)


def mgf_eval(kind: str, n: int, sigma2, s: float,
             convention: Convention = "mass_consistent",
             normalization: str = "mean_count") -> float:
    """MGF of the mean density at real ``s``.

    ``as_printed`` evaluates the formulas literally.  ``mass_consistent``
    (default) uses (2n+1) 1F1(-2n; 2; -u) and an overall 1/2 for GSE, and
    for even-n GOE the rescaled Gaussian-integral term (factor sqrt(2) sigma)
    and the doubled Hermite sum.  GOE values are the real part of a complex
    evaluation; the imaginary part is asserted negligible.
    """
    MGFConvention(convention)
    s2 = float(sigma2)
    s = float(s)
    u = s2 * s * s
    if kind == "GUE":
        val = _gue_value(n, s2, s)
    elif kind == "GSE":
        second = 0.0
        for i in range(n + 1):
            c = u**i * 2**i * math.factorial(n) / (math.factorial(2 * i) * math.factorial(n - i))
            second += c * hyp1f1(-(2 * n - 2 * i), 1 + 2 * i, -u)
        second *= math.exp(u / 2)
        if convention == "as_printed":
            val = -second + _gue_value(n, s2, s)
        else:
            val = 0.5 * (-second + (2 * n + 1) * math.exp(u / 2) * hyp1f1(-2 * n, 2, -u))
    elif kind == "GOE":
        val = _goe_value(n, s2, s, convention)
    else:
        raise ValueError(f"unknown ensemble {kind!r}")
    if convention == "mass_consistent" and s == 0.0 and abs(val - n) > 1e-10 * n:
        raise ConventionError(f"{kind} n={n}: MGF at s=0 is {val}, expected {n}")
    if normalization == "probability":
        val /= n
    elif normalization != "mean_count":
        raise ValueError(f"unknown normalization {normalization!r}")
    return val


def _goe_value(n, s2, s, convention):
    u = s2 * s * s
    sig = math.sqrt(s2)
    total = complex(_gue_value(n, s2, s))
    if n % 2:
        total += math.exp(u) * hyp1f1(-Fraction(n - 1, 2), Fraction(1, 2), -2 * u)
    acc = 0.0
    for i in range((n - 1) // 2 + 1):
        c = u**i * double_factorial(n - 1) / (math.factorial(2 * i) * double_factorial(n - 1 - 2 * i))
        acc += c * hyp1f1(-(n - 1 - 2 * i), 1 + 2 * i, -u)
    total -= math.exp(u / 2) * acc
    if n % 2 == 0:
        k = n // 2
        pref = double_factorial(n - 1) / (2**k * math.factorial(n - 1))
        lead = 2 * s if convention == "as_printed" else 2 * math.sqrt(2) * sig * s
        first = (
            lead * math.factorial(n - 1) / math.factorial(k - 1)
            * hyp1f1(-(k - 1), Fraction(3, 2), -2 * u)
            * math.exp(u) * math.sqrt(2) * gauss_integral(sig * s)
        )
        herm = 0j
        z1 = 1j * sig * math.sqrt(2) * s
        z2 = -sig * s / math.sqrt(2)
        for j in range(1, n):
            m = n - 1 - j
            herm += math.comb(n - 1, j) * (-1j) ** m * hermite_poly_eval(m, z1) * hermite_poly_eval(j - 1, z2)
        weight = 1.0 if convention == "as_printed" else 2.0
        total += pref * (first + weight * math.exp(u / 2) * herm)
    if abs(total.imag) > 1e-10 * max(abs(total.real), 1e-300):
        raise ArithmeticError(f"GOE MGF has a non-negligible imaginary part {total.imag}")
    return total.real


# --------------------------------------------------------------------------
# differential equations in s
# --------------------------------------------------------------------------

def _ode_parts(kind: str, n: int, sigma2):
    return _ode_parts_exact(kind, n, as_fraction(sigma2))


@lru_cache(maxsize=128)
def _ode_parts_exact(kind: str, n: int, s2: Fraction):
    """Return (terms, rhs) as lists of MGFForm whose sums must agree.

    GUE: s L'' + 3 L' - s (sigma^4 s^2 + 4 n sigma^2) L = 0.
    GSE/GOE: s L'' - s (4 sigma^4 s^2 + c sigma^2) L = w (-3 U' + 3 sigma^2 s U),
    with c = 8n+2, U = GUE(2n+1), w = 1/2 for GSE (mass-n density) and
    c = 4n-2, U = GUE(n), w = 1 for GOE.
    """
    s = Poly.x()
    L = mgf_form(kind, n, s2)
    L1 = L.deriv()
    L2 = L1.deriv()
    if kind == "GUE":
        terms = [L2.times_poly(s), L1 * 3, -L.times_poly(s * (s * s * s2 * s2 + 4 * n * s2))]
        return terms, []
    if kind == "GSE":
        c, U, w = 8 * n + 2, _gue_form(2 * n + 1, s2), Fraction(1, 2)
    else:
        c, U, w = 4 * n - 2, _gue_form(n, s2), Fraction(1)
    terms = [L2.times_poly(s), -L.times_poly(s * (s * s * 4 * s2 * s2 + c * s2))]
    rhs = [U.deriv() * (-3 * w), U.times_poly(s * (3 * s2 * w))]
    return terms, rhs


def mgf_ode_residual_form(kind: str, n: int, sigma2) -> MGFForm:
    """LHS - RHS of the MGF ODE as an exact form; identically zero when it holds."""
    terms, rhs = _ode_parts(kind, n, sigma2)
    total = MGFForm.build(as_fraction(sigma2), [])
    for t in terms:
        total = total + t
    for t in rhs:
        total = total - t
    return total


def mgf_ode_residual(kind: str, n: int, sigma2, s: float) -> float:
    """Relative residual of the MGF ODE at s (largest term as the scale)."""
    terms, rhs = _ode_parts(kind, n, sigma2)
    vals = [t(s) for t in terms]
    rvals = [t(s) for t in rhs]
    scale = max(abs(v) for v in vals + rvals)
    if scale == 0:
        return 0.0
    return abs(sum(vals) - sum(rvals)) / scale


# --------------------------------------------------------------------------
# moments
# --------------------------------------------------------------------------

def moments_from_mgf(kind: str, n: int, sigma2, upto: int,
                     convention: Convention = "mass_consistent",
                     normalization: str = "mean_count") -> list[Fraction]:
    """Exact moments m_0..m_upto from the Taylor series of the MGF."""
    if upto % 2 or upto < 0:
        raise ValueError("upto must be a non-negative even integer")
    if upto > 40:
        raise ValueError("moment extraction is limited to order 40")
    form = mgf_form(kind, n, sigma2, convention)
    moments = form.series(upto).moments()
    if any(m != 0 for m in moments[1::2]):
        raise ArithmeticError("odd moments of an even density must vanish")
    if normalization == "probability":
        moments = [m / n for m in moments]
    elif normalization != "mean_count":
        raise ValueError(f"unknown normalization {normalization!r}")
    return moments


# --------------------------------------------------------------------------
# auxiliary Laplace integrals
# --------------------------------------------------------------------------

def two_hermite_laplace(nn: int, k: int, s: float) -> float:
    """int exp(s x - x^2) H_nn(x) H_k(x) dx for k <= nn, via 1F1."""
    if not 0 <= k <= nn:
        raise ValueError("need 0 <= k <= nn")
    pref = math.sqrt(math.pi) * math.factorial(nn) * 2**k / math.factorial(nn - k)
    return pref * math.exp(s * s / 4) * s ** (nn - k) * hyp1f1(-k, nn - k + 1, -s * s / 2)


def _a0(s: float) -> float:
    return math.sqrt(2 * math.pi) * math.exp(s * s / 2) * gauss_integral(s / math.sqrt(2))


def a_series_value(n: int, s: float) -> float:
    """A_{n-1}(s) = int exp(s x - x^2/2) H_{n-1}(x) G(x) dx, G(x) = int_0^x exp(-t^2/2).

    Closed form from the generating function e^{2sx+x^2}(C(s) + 2 sqrt(pi)
    e^{s^2/4} int_0^x e^{-st-t^2} dt).  Even n uses the 1F1(.; 3/2; .) form
    of the leading part; odd n the 1F1(.; 1/2; .) form.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    m = n - 1
    if m % 2:
        k = (m - 1) // 2
        lead = 2 * s * math.factorial(m) / math.factorial(k) * hyp1f1(-k, Fraction(3, 2), -s * s)
    else:
        k = m // 2
        lead = math.factorial(m) / math.factorial(k) * hyp1f1(-k, Fraction(1, 2), -s * s)
    herm = 0j
    for j in range(1, m + 1):
        herm += math.comb(m, j) * (-1j) ** (m - j) * hermite_poly_eval(m - j, 1j * s) * hermite_poly_eval(j - 1, -s / 2)
    val = lead * _a0(s) + 2 * math.sqrt(math.pi) * math.exp(s * s / 4) * herm
    if abs(val.imag) > 1e-10 * max(abs(val.real), 1e-300):
        raise ArithmeticError("A_n(s) has a non-negligible imaginary part")
    return val.real


def a_series_recurrence_residual(m: int, s: float) -> float:
    """|A_{m+1} - (2s A_m + 2m A_{m-1} + 2 sqrt(pi) e^{s^2/4} s^m)|, relative."""
    lhs = a_series_value(m + 2, s)
    rhs = 2 * s * a_series_value(m + 1, s) + 2 * math.sqrt(math.pi) * math.exp(s * s / 4) * s**m
    if m >= 1:
        rhs += 2 * m * a_series_value(m, s)
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)


# --------------------------------------------------------------------------
# 1/n expansions (sigma^2 = 1/n)
# --------------------------------------------------------------------------

def _falling_poly(offset: int, scale: int, length: int) -> dict[int, int]:
    """prod_{k<length} (scale*n + offset - k) as {power of n: coefficient}."""
    poly = {0: 1}
    for k in range(length):
        nxt: dict[int, int] = {}
        for p, c in poly.items():
            nxt[p + 1] = nxt.get(p + 1, 0) + c * scale
            nxt[p] = nxt.get(p, 0) + c * (offset - k)
        poly = nxt
    return poly


def _gue_1n_table(n: int) -> dict[int, Poly]:
    """n 1F1(1-n; 2; -s^2/n) = sum_p c_p(s) n^p via signed Stirling numbers.

    c_{1-j}(s) = sum_{i=j-1}^{n-1} (-1)^j [i+1, i+1-j] s^{2i} / (i! (i+1)!).
    """
    table: dict[int, dict[int, Fraction]] = {}
    for i in range(n):
        denom = math.factorial(i) * math.factorial(i + 1)
        for j in range(i + 2):
            coef = Fraction((-1) ** j * stirling_first_unsigned(i + 1, i + 1 - j), denom)
            if coef:
                table.setdefault(1 - j, {})
                table[1 - j][2 * i] = table[1 - j].get(2 * i, Fraction(0)) + coef
    return {p: Poly([d.get(k, 0) for k in range(max(d) + 1)]) for p, d in table.items()}


def _gse_second_1n_table(n: int) -> dict[int, Poly]:
    """Second GSE term (without exp) as sum_p c_p(s) n^p.

    sum_{i,j} 2^i b^{(i,j)}(n) s^{2i+2j} / ((2i+j)! j! n^{i+j}), where
    b^{(i,j)} are the coefficients of prod_{k<i}(n-k) prod_{k<j}(2n-2i-k).
    """
    table: dict[int, dict[int, Fraction]] = {}
    for i in range(n + 1):
        first = _falling_poly(0, 1, i)
        for j in range(2 * n - 2 * i + 1):
            second = _falling_poly(-2 * i, 2, j)
            denom = math.factorial(2 * i + j) * math.factorial(j)
            for p1, c1 in first.items():
                for p2, c2 in second.items():
                    power = p1 + p2 - (i + j)
                    coef = Fraction(2**i * c1 * c2, denom)
                    if coef:
                        row = table.setdefault(power, {})
                        row[2 * i + 2 * j] = row.get(2 * i + 2 * j, Fraction(0)) + coef
    return {p: Poly([d.get(k, 0) for k in range(max(d) + 1)]) for p, d in table.items() if any(d.values())}


def _gse_first_1n_table(n: int) -> dict[int, Poly]:
    """(2n+1) 1F1(-2n; 2; -s^2/n) = sum_i (2n+1)_{(i+1)} s^{2i}/(i!(i+1)! n^i)."""
    table: dict[int, dict[int, Fraction]] = {}
    for i in range(2 * n + 1):
        fall = _falling_poly(1, 2, i + 1)
        denom = math.factorial(i) * math.factorial(i + 1)
        for p, c in fall.items():
            row = table.setdefault(p - i, {})
            row[2 * i] = row.get(2 * i, Fraction(0)) + Fraction(c, denom)
    return {p: Poly([d.get(k, 0) for k in range(max(d) + 1)]) for p, d in table.items() if any(d.values())}


def gse_second_term_1n(n: int, s: float, exp_terms: int = 80) -> list[float]:
    """Partial sums (descending powers of n) of the second GSE term at sigma^2 = 1/n."""
    return _merged_partials(_gse_second_1n_table(n), n, s, exp_terms)


def _merged_partials(table: dict[int, Poly], n: int, s: float, exp_terms: int) -> list[float]:
    s_exact = as_fraction(float(s))
    half = s_exact * s_exact / 2
    exp_coef = [half**l / math.factorial(l) for l in range(exp_terms)]
    vals = {p: poly(s_exact) for p, poly in table.items()}
    merged: dict[int, Fraction] = {}
    for p, v in vals.items():
        for l, e in enumerate(exp_coef):
            merged[p - l] = merged.get(p - l, Fraction(0)) + v * e
    partials = []
    acc = Fraction(0)
    nn = Fraction(n)
    for p in sorted(merged, reverse=True):
        acc += merged[p] * nn**p
        partials.append(float(acc))
    return partials


def mgf_expansion_1n(kind: str, s: float, n: int, K: int | None = None,
                     convention: Convention = "mass_consistent",
                     exp_terms: int = 80) -> list[float]:
    """Partial sums of the 1/n expansion of the mean-count MGF at sigma^2 = 1/n.

    Entry k is the sum of all orders n^{p_max}, ..., n^{p_max - k} after the
    exp(s^2/(2n)) prefactor has been multiplied out as a series in 1/n.  With
    ``K=None`` every order is returned; the last entry reproduces the closed
    formula.  GSE ``as_printed`` pairs the second term with the order-n GUE
    term; ``mass_consistent`` uses (2n+1) 1F1(-2n; 2; .) and halves.
    """
    if kind == "GUE":
        table = _gue_1n_table(n)
    elif kind == "GSE":
        second = _gse_second_1n_table(n)
        first = _gue_1n_table(n) if convention == "as_printed" else _gse_first_1n_table(n)
        table = dict(first)
        for p, poly in second.items():
            table[p] = table.get(p, Poly()) - poly
        if convention == "mass_consistent":
            table = {p: poly * Fraction(1, 2) for p, poly in table.items()}
    else:
        raise ValueError("1/n expansions are provided for GUE and GSE only")
    partials = _merged_partials(table, n, s, exp_terms)
    return partials if K is None else partials[:K]
