"""Mean spectral densities of the Gaussian ensembles.

All densities are evaluated from the Hermite-function representation at the
reference variance sigma^2 = 1/2 and rescaled: for a variance ``sigma2`` the
density at x is ``q(x / a) / a`` with ``a = sqrt(2 sigma2)``.

GSE follows the mass-n convention: the printed combination
``p_GUE(2n+1) + tau_{2n+1}`` integrates to 2n and is halved here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Literal

import numpy as np

from .poly import Poly
from .specialfn import GAUSS_HALF_LINE, double_factorial, gauss_integral, hermite_fn_table

__all__ = [
    "EnsembleSpec",
    "DensityQuery",
    "QuadratureError",
    "hermite_fn_derivs",
    "sign_integral",
    "tau_eval",
    "alpha_eval",
    "hermite_fn_integral",
    "hermite_fn_integral_quadrature",
    "gue_reference_density",
    "density_eval",
    "density_ode_residual",
    "tau_ode_residual",
    "integrate_against",
    "integrate_function",
    "quadrature_window",
]

Kind = Literal["GOE", "GUE", "GSE"]
KINDS: tuple[str, ...] = ("GOE", "GUE", "GSE")


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not settle within the refinement budget."""


@dataclass(frozen=True)
class EnsembleSpec:
    kind: Kind
    n: int
    sigma2: float = 0.5
    normalization: Literal["mean_count", "probability"] = "mean_count"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ensemble {self.kind!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("matrix order n must be a positive integer")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if self.normalization not in ("mean_count", "probability"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    @property
    def scale(self) -> float:
        """sigma * sqrt(2): maps x to the sigma^2 = 1/2 reference variable."""
        return math.sqrt(2.0 * float(self.sigma2))

    @property
    def mass(self) -> float:
        return 1.0 if self.normalization == "probability" else float(self.n)

    def with_(self, **changes) -> "EnsembleSpec":
        return replace(self, **changes)


@dataclass(frozen=True)
class DensityQuery:
    spec: EnsembleSpec
    x: float
    deriv: int = 0

    def __post_init__(self):
        if self.deriv not in (0, 1, 2, 3):
            raise ValueError("density derivatives are available up to order 3")


# --------------------------------------------------------------------------
# building blocks at sigma^2 = 1/2
# --------------------------------------------------------------------------

def hermite_fn_derivs(table, k: int, x, deriv: int):
    """phi_k^(d)(x) for d <= 3 from a table holding phi_0..phi_{k+1}.

    Uses phi' from neighbours and phi'' = (x^2 - 2k - 1) phi.
    """
    phi = table[k]
    if deriv == 0:
        return phi
    d1 = -math.sqrt((k + 1) / 2) * table[k + 1]
    if k > 0:
        d1 = d1 + math.sqrt(k / 2) * table[k - 1]
    if deriv == 1:
        return d1
    w = x * x - 2 * k - 1
    if deriv == 2:
        return w * phi
    return 2 * x * phi + w * d1


def _phi_derivs(table, k, x):
    return [hermite_fn_derivs(table, k, x, d) for d in range(4)]


def sign_integral(n: int, x, table=None):
    """(1/2) * integral of sign(x - t) phi_n(t) dt.

    Closed form as a finite Hermite-function sum plus, for even n, a multiple
    of the Gaussian integral.  Unrolled from
    I_n = -sqrt(2/n) phi_{n-1} + sqrt((n-1)/n) I_{n-2},
    I_1 = -sqrt(2) phi_0,  I_0 = pi^(-1/4) G(x).
    """
    x = np.asarray(x, dtype=float)
    if table is None:
        table = hermite_fn_table(max(n, 1), x)
    total = np.zeros_like(x)
    weight = 1.0
    m = n
    while m >= 1:
        total = total - weight * math.sqrt(2.0 / m) * table[m - 1]
        weight *= math.sqrt((m - 1) / m)
        m -= 2
    if m == 0:
        total = total + weight * math.pi ** -0.25 * gauss_integral(x)
    return total


def tau_eval(n: int, x, deriv: int = 0, table=None):
    """tau_n(x) = sqrt(n/2) phi_{n-1}(x) I_n(x) and its derivatives (<= 3).

    Derivatives are analytic: I_n' = phi_n and the phi-derivative identities.
    """
    if n < 1:
        raise ValueError("tau_n needs n >= 1")
    if deriv not in (0, 1, 2, 3):
        raise ValueError("deriv must be 0..3")
    x = np.asarray(x, dtype=float)
    if table is None:
        table = hermite_fn_table(n + 1, x)
    c = math.sqrt(n / 2)
    A = _phi_derivs(table, n - 1, x)          # phi_{n-1} and derivatives
    B = [sign_integral(n, x, table)] + _phi_derivs(table, n, x)[:3]  # I_n, phi_n, phi_n', phi_n''
    out = np.zeros_like(x)
    for j in range(deriv + 1):
        out = out + math.comb(deriv, j) * A[deriv - j] * B[j]
    return c * out


def hermite_fn_integral(m: int) -> float:
    """Integral of phi_m over the real line (closed form via H_m(0)).

    phi_m is a Fourier eigenfunction, so the integral is sqrt(2 pi) (-i)^m
    phi_m(0) = sqrt(2 pi) 2^(m/2) (m-1)!! / sqrt(2^m m! sqrt(pi)) for even m.
    """
    if m % 2:
        return 0.0
    log_val = (
        0.5 * math.log(2 * math.pi)
        + 0.5 * m * math.log(2)
        + math.log(double_factorial(m - 1))
        - 0.5 * (m * math.log(2) + math.lgamma(m + 1) + 0.5 * math.log(math.pi))
    )
    return math.exp(log_val)


def hermite_fn_integral_quadrature(m: int) -> float:
    """Independent route: Gauss-Legendre quadrature of phi_m over [-L, L]."""
    half = 12.0 + 2.0 * math.sqrt(2 * m + 1)
    return _adaptive_gl(lambda t: hermite_fn_table(m, t)[m], -half, half)


def alpha_eval(n: int, x, deriv: int = 0, table=None):
    """alpha_n = phi_{n-1} / int(phi_{n-1}) for odd n, zero for even n."""
    x = np.asarray(x, dtype=float)
    if n % 2 == 0:
        return np.zeros_like(x)
    if table is None:
        table = hermite_fn_table(n, x)
    return hermite_fn_derivs(table, n - 1, x, deriv) / hermite_fn_integral(n - 1)


def gue_reference_density(n: int, x, deriv: int = 0, table=None):
    """sum_{k<n} phi_k(x)^2 and derivatives, term by term."""
    x = np.asarray(x, dtype=float)
    if table is None:
        table = hermite_fn_table(n, x)
    out = np.zeros_like(x)
    for k in range(n):
        f = _phi_derivs(table, k, x)
        if deriv == 0:
            out = out + f[0] * f[0]
        elif deriv == 1:
            out = out + 2 * f[0] * f[1]
        elif deriv == 2:
            out = out + 2 * f[1] * f[1] + 2 * f[0] * f[2]
        else:
            out = out + 6 * f[1] * f[2] + 2 * f[0] * f[3]
    return out


def _reference_density(kind: str, n: int, y, deriv: int):
    """Mean-count density at sigma^2 = 1/2."""
    if kind == "GUE":
        return gue_reference_density(n, y, deriv)
    if kind == "GSE":
        big = 2 * n + 1
        table = hermite_fn_table(big + 1, y)
        return 0.5 * (gue_reference_density(big, y, deriv, table) + tau_eval(big, y, deriv, table))
    table = hermite_fn_table(n + 1, y)
    out = gue_reference_density(n, y, deriv, table) + tau_eval(n, y, deriv, table)
    if n % 2:
        out = out + alpha_eval(n, y, deriv, table)
    return out


def density_eval(q: DensityQuery | EnsembleSpec, x=None, deriv: int | None = None):
    """Mean density (or derivative up to order 3) for ``q.spec`` at ``q.x``.

    Accepts either a :class:`DensityQuery` or ``(spec, x, deriv)``; ``x`` may
    be an array.
    """
    if isinstance(q, DensityQuery):
        spec, x, deriv = q.spec, q.x, q.deriv
    else:
        spec = q
        deriv = 0 if deriv is None else deriv
    if deriv not in (0, 1, 2, 3):
        raise ValueError("density derivatives are available up to order 3")
    scalar = np.ndim(x) == 0
    a = spec.scale
    y = np.asarray(x, dtype=float) / a
    val = _reference_density(spec.kind, spec.n, y, deriv) / a ** (deriv + 1)
    if spec.normalization == "probability":
        val = val / spec.n
    return float(val) if scalar else val


# --------------------------------------------------------------------------
# ODE residuals
# --------------------------------------------------------------------------

def _relative(terms, rhs_terms=()):
    lhs = sum(terms)
    rhs = sum(rhs_terms) if rhs_terms else 0.0
    scale = np.maximum.reduce([np.abs(t) for t in (*terms, *rhs_terms)])
    diff = lhs - rhs
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(scale > 0, np.abs(diff) / np.where(scale > 0, scale, 1.0), 0.0)
    return rel


def density_ode_residual(spec: EnsembleSpec, x, gse_rhs: str = "derived"):
    """Relative residual of the third-order density ODE at x.

    GUE: s^4 p''' + (4 n s^2 - x^2) p' + x p = 0   (s^2 = sigma2)
    GOE: 4 s^4 p''' + (s^2 (4n-2) - x^2) p' - 2 x p = -3 s^2 u' - 3 x u,
         u = GUE density of order n.
    GSE: same left side with 4n-2 -> 8n+2.  With the mass-n density the right
         side is -(3/2)(s^2 u' + x u) for u the GUE density of order 2n+1
         (``gse_rhs="derived"``).  ``gse_rhs="as_printed"`` uses the order-n
         GUE density with the unhalved factor, for comparison.

    Evaluated in the mean-count normalisation; the result is |LHS - RHS|
    divided by the largest individual term.
    """
    spec = spec.with_(normalization="mean_count")
    s2 = float(spec.sigma2)
    n = spec.n
    x = np.asarray(x, dtype=float)
    p = [density_eval(spec, x, d) for d in range(4)]
    if spec.kind == "GUE":
        terms = (s2 * s2 * p[3], (4 * n * s2 - x * x) * p[1], x * p[0])
        return _relative(terms)
    c = s2 * (4 * n - 2) if spec.kind == "GOE" else s2 * (8 * n + 2)
    lhs = (4 * s2 * s2 * p[3], (c - x * x) * p[1], -2 * x * p[0])
    if spec.kind == "GOE":
        u = EnsembleSpec("GUE", n, spec.sigma2)
        factor = 3.0
    elif gse_rhs == "derived":
        u = EnsembleSpec("GUE", 2 * n + 1, spec.sigma2)
        factor = 1.5
    elif gse_rhs == "as_printed":
        u = EnsembleSpec("GUE", n, spec.sigma2)
        factor = 3.0
    else:
        raise ValueError(f"unknown gse_rhs {gse_rhs!r}")
    u0 = density_eval(u, x, 0)
    u1 = density_eval(u, x, 1)
    rhs = (-factor * s2 * u1, -factor * x * u0)
    return _relative(lhs, rhs)


def tau_ode_residual(n: int, x):
    """Relative residual of
    2 tau''' + 2 (2n-1-x^2) tau' - 4 x tau = (12n-1-6x^2) u' + 6 x u,
    u the GUE density of order n at sigma^2 = 1/2.
    """
    x = np.asarray(x, dtype=float)
    table = hermite_fn_table(n + 1, x)
    t = [tau_eval(n, x, d, table) for d in range(4)]
    u0 = gue_reference_density(n, x, 0, table)
    u1 = gue_reference_density(n, x, 1, table)
    lhs = (2 * t[3], 2 * (2 * n - 1 - x * x) * t[1], -4 * x * t[0])
    rhs = ((12 * n - 1 - 6 * x * x) * u1, 6 * x * u0)
    return _relative(lhs, rhs)


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------

_GL_ORDER = 32
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)


def _composite_gl(fn: Callable, a: float, b: float, panels: int) -> float:
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    vals = np.asarray(fn(pts), dtype=float).reshape(panels, _GL_ORDER)
    return float(np.sum(half * (vals @ _GL_WEIGHTS)))


def _adaptive_gl(fn: Callable, a: float, b: float, rtol: float = 1e-11,
                 panels: int = 8, max_levels: int = 20, atol: float = 0.0) -> float:
    prev = _composite_gl(fn, a, b, panels)
    for _ in range(max_levels):
        panels *= 2
        cur = _composite_gl(fn, a, b, panels)
        if abs(cur - prev) <= max(rtol * abs(cur), atol, 1e-300):
            return cur
        if cur == prev == 0.0:
            return cur
        prev = cur
    raise QuadratureError(f"quadrature did not settle after {max_levels} refinements")


def quadrature_window(spec: EnsembleSpec) -> float:
    """Half-width R: spectral edge plus ten reference standard deviations."""
    return spec.scale * (2.0 * math.sqrt(2 * spec.n + 1) + 10.0)


def integrate_function(spec: EnsembleSpec, fn: Callable, rtol: float = 1e-11,
                       atol: float = 0.0, window: float | None = None) -> float:
    """Integral of fn(x) * density(x) over [-R, R], adaptive Gauss-Legendre.

    ``window`` overrides R, e.g. for high-degree test functions whose mass
    sits further out than the spectral edge.
    """
    R = quadrature_window(spec) if window is None else window
    return _adaptive_gl(lambda x: fn(x) * density_eval(spec, x, 0), -R, R, rtol=rtol, atol=atol)


def integrate_against(spec: EnsembleSpec, g: Poly, rtol: float = 1e-11) -> float:
    """Integral of the polynomial g against the density of ``spec``."""
    if g.degree > 64:
        raise ValueError("test polynomials are limited to degree 64")
    coeffs = g.float_coeffs()
    return integrate_function(spec, lambda x: np.polynomial.polynomial.polyval(x, coeffs), rtol)
