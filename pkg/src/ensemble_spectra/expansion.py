"""1/n^2 expansions of (1/n) E Tr g(X) around the semicircle law.

Test functions are polynomials.  The operators ``S`` and ``T`` act on
:class:`~ensemble_spectra.poly.Poly` exactly; the GSE/GOE expansions first
solve an auxiliary third-order equation for a power series ``f`` and then
expand ``q = f'/n - x f`` against the GUE.

Arithmetic runs either in exact rationals (``precision_bits=None``) or in
``mpmath`` floating point with a private context of the requested width.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Sequence

import mpmath
import numpy as np

from .densities import EnsembleSpec, integrate_against, integrate_function, quadrature_window
from .poly import Poly
from .specialfn import semicircle_moment, to_mpf

__all__ = [
    "TruncatedSeries",
    "ExpansionReport",
    "PrecisionOverflowError",
    "semicircle_average",
    "op_S",
    "op_T",
    "gue_expand",
    "default_truncation",
    "default_precision_bits",
    "solve_aux_f",
    "bounded_seed",
    "resolve_seeds",
    "aux_coefficient",
    "gse_goe_expand",
    "expansion_prefactor",
    "stepdiff_identity_residual",
]

Kind = Literal["GSE", "GOE"]
Convention = Literal["corrected", "as_printed"]


class PrecisionOverflowError(ArithmeticError):
    """A series coefficient left the usable range of the working precision."""


@dataclass(frozen=True)
class TruncatedSeries:
    """Power series kept through degree ``trunc_degree``.

    ``precision_bits`` is None for exact rational coefficients.
    """

    poly: Poly
    trunc_degree: int
    precision_bits: int | None = None

    @property
    def coeffs(self) -> tuple:
        return self.poly.coeffs

    def __call__(self, x):
        return self.poly(x)


@dataclass(frozen=True)
class ExpansionReport:
    """Per-order terms and partial sums of an expansion.

    ``diagnostics`` holds ratios |t_{j+1}/t_j|, the divergence flag and,
    when requested, the shift of the final partial under doubled truncation.
    """

    kind: str
    n: int
    terms: tuple[float, ...]
    partials: tuple[float, ...]
    max_order: int
    reference: float | None = None
    trunc_degree: int | None = None
    precision_bits: int | None = None
    exact_terms: tuple | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def final(self) -> float:
        return self.partials[-1]

    @property
    def error(self) -> float | None:
        return None if self.reference is None else abs(self.final - self.reference)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "max_order": self.max_order,
            "trunc_degree": self.trunc_degree,
            "precision_bits": self.precision_bits,
            "terms": list(self.terms),
            "partials": list(self.partials),
            "reference": self.reference,
            "error": self.error,
            "diagnostics": self.diagnostics,
        }


# --------------------------------------------------------------------------
# arithmetic helpers
# --------------------------------------------------------------------------

class _Field:
    """Number conversions for exact or fixed-width arithmetic."""

    def __init__(self, bits: int | None):
        self.bits = bits
        if bits is None:
            self.ctx = None
        else:
            self.ctx = mpmath.MPContext()
            self.ctx.prec = bits

    def __call__(self, value):
        if self.ctx is None:
            return value if isinstance(value, Fraction) else Fraction(value)
        return to_mpf(value, self.ctx)

    def poly(self, p: Poly) -> Poly:
        return p.map(self)

    def check(self, value):
        if self.ctx is not None and not self.ctx.isfinite(value):
            raise PrecisionOverflowError("series coefficient overflowed the working precision")
        return value


def semicircle_average(g: Poly):
    """int g(t) sqrt(4 - t^2)/(2 pi) dt, in the coefficient type of g."""
    total = 0
    for m in range(0, len(g), 2):
        total = total + g[m] * int(semicircle_moment(m))
    return total


def op_S(g: Poly) -> Poly:
    """Unique polynomial f with (x^2 - 4) f' + 3 x f = g - avg(g)."""
    d = g.degree
    if d <= 0:
        return Poly()
    a = [0] * (d + 2)
    exact = all(isinstance(c, (int, Fraction)) for c in g.coeffs)
    for m in range(d, 0, -1):
        num = g[m] + 4 * (m + 1) * a[m + 1]
        a[m - 1] = Fraction(num) / (m + 2) if exact else num / (m + 2)
    avg = semicircle_average(g)
    closure = -4 * a[1] - (g[0] - avg)
    if exact:
        assert closure == 0, "constant-term equation of S did not close"
    else:
        eps = float(getattr(closure, "context", mpmath.mp).eps) if not isinstance(closure, float) else 2.0**-52
        # the top-down solve accumulates terms of size |g_m| 2^m
        scale = sum(abs(c) * 2**m for m, c in enumerate(g.coeffs))
        assert abs(closure) <= 1e6 * eps * scale, "constant-term equation of S did not close"
    return Poly(a[: d])


def op_T(g: Poly) -> Poly:
    """Third derivative of S g."""
    return op_S(g).deriv(3)


def gue_expand(g: Poly, n: int) -> ExpansionReport:
    """Terminating expansion of (1/n) E Tr g(X) for GUE at sigma^2 = 1/n."""
    if n < 1:
        raise ValueError("n must be positive")
    g = g.map(lambda c: Fraction(c) if isinstance(c, int) else c)
    exact_terms = []
    cur = g
    j = 0
    while True:
        exact_terms.append(semicircle_average(cur) / Fraction(n) ** (2 * j))
        cur = op_T(cur)
        j += 1
        if not cur:
            break
    terms = tuple(float(t) for t in exact_terms)
    partials = []
    acc = Fraction(0)
    for t in exact_terms:
        acc += t
        partials.append(acc)
    return ExpansionReport(
        kind="GUE", n=n, terms=terms, partials=tuple(float(p) for p in partials),
        max_order=len(terms) - 1, exact_terms=tuple(exact_terms),
        diagnostics={"exact_partials": [str(p) for p in partials]},
    )


# --------------------------------------------------------------------------
# auxiliary equation
# --------------------------------------------------------------------------

def aux_coefficient(n: int, kind: Kind) -> Fraction:
    if kind == "GSE":
        return Fraction(8 * n + 2, n)
    if kind == "GOE":
        return Fraction(4 * n - 2, n)
    raise ValueError(f"auxiliary equation is defined for GSE and GOE, not {kind!r}")


def default_truncation(g: Poly, n: int) -> int:
    """Truncation degree that resolves the auxiliary series on the GSE-rescaled
    interval; the Taylor coefficients of f only settle beyond degree ~ 20 n."""
    return max(80, 8 * max(g.degree, 0) + 20 * n + 40)


def default_precision_bits(n: int, D: int) -> int:
    return max(128, math.ceil(1.5 * n * D))


def _h_series(g: Poly, n: int, kind: Kind, D: int, F: "_Field", seeds) -> list:
    c = F(aux_coefficient(n, kind))
    nsq = F(n * n)
    h = [F(0)] * (D + 1)
    h[0], h[1] = F(seeds[0]), F(seeds[1])
    gc = [F(g[m]) for m in range(D + 1)]
    for m in range(D - 1):
        prev = h[m - 2] if m >= 2 else 0
        h[m + 2] = F.check((prev - c * h[m] - gc[m]) * nsq / (4 * (m + 2) * (m + 1)))
    return h


def bounded_seed(g: Poly, n: int, kind: Kind, max_level: int = 400) -> Fraction:
    """h_0 removing the exp(n x^2 / 4) mode from the even part of the solution.

    Every even solution is h_p + h_0 h_hom with h_p seeded (0, 0) and h_hom
    the even homogeneous solution seeded (1, 0).  When h_hom grows, the
    bounded choice is h_0 = -lim h_p(X) / h_hom(X).  The ratio is evaluated
    at n X^2 / 4 = L for L = 40, 60, ... until two successive estimates agree
    to 1e-12 exp(-n) (an error e in h_0 enters the semicircle averages
    roughly as e exp(n)).  Raises ValueError when they never agree, which is
    the case when the even homogeneous solution decays.
    """
    even = Poly([c if k % 2 == 0 else 0 for k, c in enumerate(g.coeffs)])
    tol = 1e-12 * math.exp(-n)
    prev = None
    for L in range(40, max_level + 1, 20):
        F = _Field(64 + 8 * L)
        D = 2 * math.ceil(3 * L + n) + 40 + max(even.degree, 0)
        X = F.ctx.sqrt(F(Fraction(4 * L, n)))
        hp = Poly(_h_series(even, n, kind, D, F, (0, 0)))
        hh = Poly(_h_series(Poly(), n, kind, D, F, (1, 0)))
        cur = -hp(X) / hh(X)
        if prev is not None and abs(cur - prev) <= tol * max(abs(cur), 1):
            sign, man, exp, _ = cur._mpf_
            return (-1) ** sign * Fraction(int(man)) * Fraction(2) ** int(exp)
        prev = cur
    raise ValueError(f"no bounded even solution for {kind} n={n}: seed estimates do not settle")


def resolve_seeds(g: Poly, n: int, kind: Kind, seeds="auto") -> tuple:
    """Turn a seed policy into explicit (h_0, h_1).

    ``"zero"`` gives (0, 0) and ``"bounded"`` uses :func:`bounded_seed`.
    ``"auto"`` is bounded for GOE with even n, where the density tail
    exp(-n x^2 / 4) cannot absorb the growing mode but a bounded even
    solution exists, and zero otherwise.
    """
    if isinstance(seeds, tuple):
        return seeds
    if seeds == "auto":
        seeds = "bounded" if (kind == "GOE" and n % 2 == 0) else "zero"
    if seeds == "zero":
        return (0, 0)
    if seeds == "bounded":
        return (bounded_seed(g, n, kind), 0)
    raise ValueError(f"unknown seed policy {seeds!r}")


def solve_aux_f(g: Poly, n: int, kind: Kind, D: int | None = None,
                precision_bits: int | None = None,
                seeds="auto") -> TruncatedSeries:
    """Power-series solution of -(4/n^2) f''' + (x^2 - c) f' = g, f(0) = 0.

    With h = f' the coefficients obey
    h_{m+2} = (h_{m-2} - c h_m - g_m) n^2 / (4 (m+2)(m+1)),
    started from ``seeds = (h_0, h_1)`` or a policy understood by
    :func:`resolve_seeds`.  The result satisfies the equation exactly
    through degree D - 2.
    """
    if D is None:
        D = default_truncation(g, n)
    if g.degree > D - 8:
        raise ValueError("truncation degree must exceed deg g by at least 8")
    seeds = resolve_seeds(g, n, kind, seeds)
    F = _Field(precision_bits)
    h = _h_series(g, n, kind, D, F, seeds)
    f = Poly(h).antideriv(F(0))
    return TruncatedSeries(f, D + 1, precision_bits)


def _aux_lhs(f: Poly, n: int, kind: Kind) -> Poly:
    """-(4/n^2) f''' + (x^2 - c) f' in the coefficient type of f."""
    c = aux_coefficient(n, kind)
    sample = f.coeffs[0] if f.coeffs else Fraction(0)
    conv = (lambda v: v) if isinstance(sample, (int, Fraction)) else (lambda v: to_mpf(v, _ctx_of(sample)))
    f1 = f.deriv()
    return f.deriv(3) * conv(Fraction(-4, n * n)) + f1 * Poly([conv(-c), 0, conv(1)])


def _ctx_of(value):
    return getattr(value, "context", mpmath.mp)


# --------------------------------------------------------------------------
# GSE / GOE expansion
# --------------------------------------------------------------------------

def expansion_prefactor(n: int, kind: Kind, convention: Convention = "corrected") -> Fraction:
    """Constant in front of the GUE expansion of q in the probability normalization.

    Corrected: 3 for GOE and 3(2n+1)/(2n) for GSE (whose GUE companion has
    order 2n+1).  ``as_printed``: 3/2 for both.
    """
    if convention == "as_printed":
        return Fraction(3, 2)
    if convention != "corrected":
        raise ValueError(f"unknown convention {convention!r}")
    return Fraction(3) if kind == "GOE" else Fraction(3 * (2 * n + 1), 2 * n)


def _q_of(f: Poly, n: int, F: _Field) -> Poly:
    return f.deriv() * F(Fraction(1, n)) - Poly.x() * f


def _expand_q(q: Poly, order_n: int, J: int, F: _Field) -> list:
    terms = []
    cur = q
    inv = F(Fraction(1, order_n * order_n))
    weight = F(1)
    for _ in range(J + 1):
        terms.append(F.check(weight * semicircle_average(cur)))
        cur = op_T(cur)
        weight = weight * inv
    return terms


def _series_terms(g: Poly, n: int, kind: Kind, J: int, D: int, bits: int | None,
                  convention: Convention, seeds) -> list:
    F = _Field(bits)
    f = solve_aux_f(g, n, kind, D, bits, seeds).poly
    q = _q_of(f, n, F)
    pref = F(expansion_prefactor(n, kind, convention))
    if kind == "GSE" and convention == "corrected":
        N = 2 * n + 1
        # the companion GUE has order N at sigma^2 = 1/n; rescale to 1/N
        scale = Fraction(N, n)
        q = Poly([c * F(scale ** (k // 2)) if k % 2 == 0 else c for k, c in enumerate(q.coeffs)])
        if not q.is_even():
            raise ValueError("the GSE rescaling needs an even q (even g and seeds (0, 0))")
        return [pref * t for t in _expand_q(q, N, J, F)]
    return [pref * t for t in _expand_q(q, n, J, F)]


def gse_goe_expand(g: Poly, n: int, kind: Kind, J: int = 6, D: int | None = None,
                   precision_bits: int | None = None, convention: Convention = "corrected",
                   reference: bool = True, check_doubling: bool = False,
                   seeds="auto") -> ExpansionReport:
    """Convergent expansion of (1/n) E Tr g(X) for GSE or GOE at sigma^2 = 1/n.

    Parameters
    ----------
    g : Poly
        Test polynomial (even, when ``kind="GSE"`` with the corrected
        prefactor).
    J : int
        Highest order kept.
    D : int, optional
        Truncation degree of the auxiliary series; defaults to
        :func:`default_truncation`.
    precision_bits : int or None
        Working precision; ``None`` for exact rationals.
    reference : bool
        Attach the quadrature value of int g p (probability normalization).
    check_doubling : bool
        Recompute with 2D and record the shift of the final partial.
    """
    if D is None:
        D = default_truncation(g, n)
    seeds = resolve_seeds(g, n, kind, seeds)
    raw = _series_terms(g, n, kind, J, D, precision_bits, convention, seeds)
    terms = tuple(float(t) for t in raw)
    partials = []
    acc = 0
    for t in raw:
        acc = acc + t
        partials.append(float(acc))
    mags = [abs(t) for t in terms]
    ratios = [mags[j + 1] / mags[j] if mags[j] else math.inf for j in range(len(mags) - 1)]
    tail = [m for m in mags[1:] if m > 0]
    divergent = any(b >= a for a, b in zip(tail, tail[1:]))
    diagnostics = {"ratios": ratios, "divergent": divergent, "convention": convention,
                   "seeds": [float(v) for v in seeds]}
    if check_doubling:
        raw2 = _series_terms(g, n, kind, J, 2 * D, precision_bits, convention, seeds)
        diagnostics["doubling_shift"] = abs(float(sum(raw2)) - partials[-1])
    ref = None
    if reference:
        spec = EnsembleSpec(kind, n, 1.0 / n, "probability")
        ref = integrate_against(spec, g.map(float))
    return ExpansionReport(
        kind=kind, n=n, terms=terms, partials=tuple(partials), max_order=J,
        reference=ref, trunc_degree=D, precision_bits=precision_bits,
        diagnostics=diagnostics,
    )


# --------------------------------------------------------------------------
# step identity
# --------------------------------------------------------------------------

def _poly_values(p: Poly, x, window: float) -> np.ndarray:
    """Evaluate a badly conditioned polynomial at float nodes.

    Coefficients are rounded to fixed point with enough fractional bits that
    the rounding stays far below 2^-64 |x|^k on the window; each node is an
    exact dyadic a / 2^b, so Horner's rule runs in integer arithmetic.
    """
    d = p.degree
    if d < 0:
        return np.zeros(np.shape(x))
    frac_bits = 128 + math.ceil(d * math.log2(max(window, 2.0)))
    scale = 1 << frac_bits
    ints = []
    for c in p.coeffs:
        c = Fraction(c) if isinstance(c, (int, Fraction)) else Fraction(*_mpf_ratio(c))
        ints.append(round(c * scale))
    out = np.empty(np.shape(x))
    for idx, xv in np.ndenumerate(np.asarray(x, dtype=float)):
        a, b2 = float(xv).as_integer_ratio()
        b = b2.bit_length() - 1
        acc = ints[d]
        shift = 0
        for k in range(d - 1, -1, -1):
            shift += b
            acc = acc * a + (ints[k] << shift)
        out[idx] = float(Fraction(acc, 1 << (shift + frac_bits)))
    return out


def _mpf_ratio(v) -> tuple[int, int]:
    sign, man, exp, _ = v._mpf_
    man = -int(man) if sign else int(man)
    return (man << exp, 1) if exp >= 0 else (man, 1 << -exp)


def stepdiff_identity_residual(g: Poly, n: int, kind: Kind, D: int | None = None,
                               precision_bits: int | None = None,
                               convention: Convention = "corrected",
                               lhs_mode: Literal["projected", "literal"] = "projected",
                               seeds="auto") -> float:
    """|LHS - RHS| / (1 + |RHS|) of the integrated auxiliary identity.

    LHS = int (-(4/n^2) f''' + (x^2 - c) f') p dx and RHS = K int q p_u dx with
    q = f'/n - x f, both by quadrature at sigma^2 = 1/n in the probability
    normalization.  K and the GUE companion p_u follow
    :func:`expansion_prefactor`: GUE of order n for GOE, of order 2n+1 for
    GSE in the corrected variant.

    The truncated series satisfies the auxiliary equation only through
    degree D - 2; beyond that its image consists of truncation debris
    x^{D+1} h_{D-1} + x^{D+2} h_D whose integral against the density tails
    can be enormous.  ``lhs_mode="projected"`` (default) drops those degrees
    before integrating; ``"literal"`` keeps them.  The right side integrates
    the truncated f over the companion's tails, which needs D of about 40 n
    (the default) rather than the 20 n that suffices for the expansion.
    """
    if D is None:
        D = max(default_truncation(g, n), 40 * n + 40)
    f = solve_aux_f(g, n, kind, D, precision_bits, seeds).poly
    if not f:
        return 0.0
    lhs_poly = _aux_lhs(f, n, kind)
    if lhs_mode == "projected":
        lhs_poly = lhs_poly.truncate(D - 2)
    elif lhs_mode != "literal":
        raise ValueError(f"unknown lhs_mode {lhs_mode!r}")
    q = _q_of(f, n, _Field(precision_bits))
    spec = EnsembleSpec(kind, n, 1.0 / n, "probability")
    comp_order = 2 * n + 1 if (kind == "GSE" and convention == "corrected") else n
    comp = EnsembleSpec("GUE", comp_order, 1.0 / n, "probability")
    w_lhs = quadrature_window(spec)
    w_rhs = quadrature_window(comp)
    lhs = integrate_function(spec, lambda x: _poly_values(lhs_poly, x, w_lhs),
                             rtol=1e-10, atol=1e-13, window=w_lhs)
    rhs = float(expansion_prefactor(n, kind, convention)) * integrate_function(
        comp, lambda x: _poly_values(q, x, w_rhs), rtol=1e-10, atol=1e-13, window=w_rhs)
    return abs(lhs - rhs) / (1.0 + abs(rhs))
