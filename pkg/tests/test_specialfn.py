import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from ensemble_spectra.specialfn import (
    GAUSS_HALF_LINE,
    HermiteOverflowError,
    PrecisionPolicy,
    catalan,
    double_factorial,
    gauss_integral,
    hermite_fn_eval,
    hermite_fn_table,
    hermite_poly_coeffs,
    hermite_poly_eval,
    hyp1f1,
    semicircle_moment,
    stirling_first_unsigned,
)

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=50)


def test_hermite_poly_examples():
    assert hermite_poly_eval(0, 3.7) == 1
    assert hermite_poly_eval(2, 0) == -2
    assert hermite_poly_eval(3, 1) == -4


@given(k=st.integers(0, 25), x=rationals)
def test_hermite_recurrence_matches_coefficients(k, x):
    coeffs = hermite_poly_coeffs(k)
    assert hermite_poly_eval(k, x) == sum(c * x**j for j, c in enumerate(coeffs))


@given(k=st.integers(0, 30), x=st.floats(-6, 6))
def test_hermite_poly_matches_scipy(k, x):
    ref = special.eval_hermite(k, x)
    assert hermite_poly_eval(k, x) == pytest.approx(ref, rel=1e-11, abs=1e-11 * 2**k * math.factorial(k) ** 0.5)


def test_hermite_poly_overflow_reported():
    with pytest.raises(HermiteOverflowError):
        hermite_poly_eval(400, 30.0)


def test_hermite_poly_extended_no_overflow():
    val = hermite_poly_eval(400, mpmath.mpf(30))
    assert mpmath.isfinite(val) and val > 1e300


def test_hermite_fn_examples():
    assert hermite_fn_eval(0, 0.0) == pytest.approx(math.pi ** -0.25, rel=1e-15)
    assert hermite_fn_eval(1, 0.0) == 0.0
    with mpmath.workprec(200):
        x = mpmath.mpf("1.3")
        ref = mpmath.hermite(50, x) * mpmath.exp(-x * x / 2) / mpmath.sqrt(
            mpmath.mpf(2) ** 50 * mpmath.factorial(50) * mpmath.sqrt(mpmath.pi))
    assert hermite_fn_eval(50, 1.3) == pytest.approx(float(ref), rel=1e-12)


def test_hermite_fn_no_overflow_at_high_order():
    vals = hermite_fn_table(400, np.linspace(-40, 40, 81))
    assert np.all(np.isfinite(vals[-1])) and np.max(np.abs(vals[-1])) < 1


@given(k=st.integers(0, 40), x=st.floats(-8, 8))
def test_hermite_fn_derivative_identity(k, x):
    d = hermite_fn_eval(k, x, deriv=1)
    ref = float(mpmath.diff(lambda t: _phi_mp(k, t), x))
    assert d == pytest.approx(ref, abs=1e-12)


def _phi_mp(k, x):
    x = mpmath.mpf(x)
    return mpmath.hermite(k, x) * mpmath.exp(-x * x / 2) / mpmath.sqrt(
        mpmath.mpf(2) ** k * mpmath.factorial(k) * mpmath.sqrt(mpmath.pi))


def test_hyp1f1_examples():
    x = Fraction(7, 3)
    assert hyp1f1(Fraction(5, 2), 3, 0) == 1
    assert hyp1f1(-1, 2, x) == 1 - x / 2
    u = Fraction(3, 5)
    assert hyp1f1(-2, 1, -u) == 1 + 2 * u + u * u / 2


@given(a=st.integers(-12, 0), b=st.sampled_from([Fraction(1, 2), Fraction(3, 2), 1, 2, 5]), x=st.floats(-4, 4))
def test_hyp1f1_terminating_matches_mpmath(a, b, x):
    ref = float(mpmath.hyp1f1(a, mpmath.mpf(b.numerator) / b.denominator if isinstance(b, Fraction) else b, x))
    assert hyp1f1(a, b, x) == pytest.approx(ref, rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("a,b,x", [(0.5, 1.5, 2.0), (1.25, 3.0, -1.5), (2.0, 0.5, 0.3)])
def test_hyp1f1_series_matches_mpmath(a, b, x):
    assert hyp1f1(a, b, x) == pytest.approx(float(mpmath.hyp1f1(a, b, x)), rel=1e-13)


def test_hyp1f1_pole_rejected():
    with pytest.raises(ValueError):
        hyp1f1(0.5, -2, 1.0)


def test_hyp1f1_extended_policy():
    pol = PrecisionPolicy("extended", bits=200, series_tolerance=1e-40)
    val = hyp1f1(mpmath.mpf("0.5"), mpmath.mpf("1.5"), mpmath.mpf(2), pol)
    with mpmath.workprec(200):
        ref = mpmath.hyp1f1(mpmath.mpf("0.5"), mpmath.mpf("1.5"), 2)
    assert abs(val - ref) < mpmath.mpf(2) ** -120


def test_precision_policy_validation():
    with pytest.raises(ValueError):
        PrecisionPolicy("extended", bits=32)
    with pytest.raises(ValueError):
        PrecisionPolicy(series_tolerance=1e-3)


def test_gauss_integral_examples():
    assert gauss_integral(0.0) == 0.0
    assert gauss_integral(math.inf) == pytest.approx(GAUSS_HALF_LINE, rel=1e-15)
    assert GAUSS_HALF_LINE == pytest.approx(1.2533141, abs=1e-7)
    assert gauss_integral(1.0) == pytest.approx(0.8556244, abs=1e-7)


@given(x=st.floats(-12, 12))
def test_gauss_integral_matches_erf(x):
    ref = GAUSS_HALF_LINE * math.erf(x / math.sqrt(2))
    assert gauss_integral(x) == pytest.approx(ref, rel=1e-13, abs=1e-16)
    assert gauss_integral(-x) == -gauss_integral(x)


def test_gauss_integral_quadrature_oracle():
    ref, _ = integrate.quad(lambda t: math.exp(-t * t / 2), 0, 2.5, epsabs=1e-14)
    assert gauss_integral(2.5) == pytest.approx(ref, rel=1e-13)


def test_stirling_examples():
    assert all(stirling_first_unsigned(n, n) == 1 for n in range(8))
    assert stirling_first_unsigned(3, 1) == 2
    assert stirling_first_unsigned(4, 2) == 11


@given(n=st.integers(2, 10), m=st.integers(2, 10))
def test_stirling_signed_identity(n, m):
    falling = math.prod(range(m - n + 1, m + 1))
    assert sum((-1) ** k * stirling_first_unsigned(n, n - k) * m ** (n - k) for k in range(n + 1)) == falling


def test_semicircle_moment_examples():
    assert semicircle_moment(0) == 1
    assert semicircle_moment(1) == 0
    assert semicircle_moment(4) == 2
    assert [catalan(m) for m in range(6)] == [1, 1, 2, 5, 14, 42]


@pytest.mark.parametrize("m", [2, 6, 10])
def test_semicircle_moment_quadrature(m):
    ref, _ = integrate.quad(lambda t: t**m * math.sqrt(4 - t * t) / (2 * math.pi), -2, 2, epsabs=1e-13)
    assert float(semicircle_moment(m)) == pytest.approx(ref, rel=1e-10)


def test_double_factorial():
    assert [double_factorial(k) for k in (-1, 0, 1, 5, 6)] == [1, 1, 1, 15, 48]
