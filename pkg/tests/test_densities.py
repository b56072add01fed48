import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from ensemble_spectra.densities import (
    DensityQuery,
    EnsembleSpec,
    QuadratureError,
    _adaptive_gl,
    alpha_eval,
    density_eval,
    density_ode_residual,
    hermite_fn_integral,
    hermite_fn_integral_quadrature,
    integrate_against,
    integrate_function,
    quadrature_window,
    tau_eval,
    tau_ode_residual,
)
from ensemble_spectra.poly import Poly
from ensemble_spectra.specialfn import hermite_fn_eval, hermite_fn_table

KINDS = ("GOE", "GUE", "GSE")


def _tau_quadrature(n, x):
    def phi(t):
        return hermite_fn_eval(n, t)
    left, _ = integrate.quad(phi, -np.inf, x, epsabs=1e-14, epsrel=1e-13)
    right, _ = integrate.quad(phi, x, np.inf, epsabs=1e-14, epsrel=1e-13)
    return math.sqrt(n / 2) * hermite_fn_eval(n - 1, x) * 0.5 * (left - right)


def test_spec_validation():
    with pytest.raises(ValueError):
        EnsembleSpec("XYZ", 3)
    with pytest.raises(ValueError):
        EnsembleSpec("GUE", 0)
    with pytest.raises(ValueError):
        EnsembleSpec("GUE", 3, -1.0)
    with pytest.raises(ValueError):
        DensityQuery(EnsembleSpec("GUE", 3), 0.0, deriv=4)


def test_tau_examples():
    assert tau_eval(1, 0.0) == pytest.approx(-1 / math.sqrt(math.pi), rel=1e-14)
    assert tau_eval(2, 3.0) == pytest.approx(_tau_quadrature(2, 3.0), abs=1e-9)


@pytest.mark.parametrize("n", range(1, 9))
def test_tau_even_and_matches_quadrature(n):
    for x in (0.3, 1.7):
        assert tau_eval(n, x) == pytest.approx(tau_eval(n, -x), abs=1e-15)
        assert tau_eval(n, x) == pytest.approx(_tau_quadrature(n, x), abs=1e-9)


def test_density_examples():
    assert density_eval(DensityQuery(EnsembleSpec("GUE", 1, 1.0), 0.0)) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-14)
    assert density_eval(DensityQuery(EnsembleSpec("GOE", 1, 0.5), 0.0)) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-14)
    spec = EnsembleSpec("GUE", 3, 0.5, "probability")
    assert integrate_function(spec, np.ones_like) == pytest.approx(1.0, abs=1e-10)


def test_goe_n1_is_normal_with_variance_2sigma2():
    x = np.linspace(-4, 4, 17)
    s2 = 0.5
    ref = np.exp(-x * x / (4 * s2)) / math.sqrt(4 * math.pi * s2)
    assert np.allclose(density_eval(EnsembleSpec("GOE", 1, s2), x), ref, rtol=1e-13)


def test_gse_n1_is_normal_with_variance_sigma2():
    x = np.linspace(-4, 4, 17)
    s2 = 0.7
    ref = np.exp(-x * x / (2 * s2)) / math.sqrt(2 * math.pi * s2)
    assert np.allclose(density_eval(EnsembleSpec("GSE", 1, s2), x), ref, rtol=1e-12)


def test_derivative_order_rejected():
    with pytest.raises(ValueError):
        density_eval(EnsembleSpec("GUE", 2), 0.0, 4)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("n", [1, 2, 5, 10])
def test_mass(kind, n):
    spec = EnsembleSpec(kind, n, 0.5)
    assert integrate_function(spec, np.ones_like) == pytest.approx(n, abs=1e-8)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("n", [3, 4])
def test_mass_scipy_oracle(kind, n):
    spec = EnsembleSpec(kind, n, 0.3)
    val, _ = integrate.quad(lambda x: density_eval(spec, x), -np.inf, np.inf, epsabs=1e-12, limit=200)
    assert val == pytest.approx(n, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(kind=st.sampled_from(KINDS), n=st.integers(1, 10), x=st.floats(0, 6), s2=st.floats(0.05, 2))
def test_evenness_and_positivity(kind, n, x, s2):
    spec = EnsembleSpec(kind, n, s2)
    p = density_eval(spec, x)
    assert p == pytest.approx(density_eval(spec, -x), rel=1e-12, abs=1e-300)
    assert p >= -1e-12


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("deriv", [1, 2, 3])
def test_analytic_derivatives_match_finite_differences(kind, deriv):
    spec = EnsembleSpec(kind, 5, 0.4)
    x, h = 0.83, 1e-4
    lower = lambda t: density_eval(spec, t, deriv - 1)
    fd = (lower(x + h) - lower(x - h)) / (2 * h)
    assert density_eval(spec, x, deriv) == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_deriv_sum_sq_identity():
    xs = np.linspace(-6, 6, 121)
    for n in (1, 4, 9):
        tab = hermite_fn_table(n + 1, xs)
        lhs = density_eval(EnsembleSpec("GUE", n, 0.5), xs, 1)
        rhs = -math.sqrt(2 * n) * tab[n] * tab[n - 1]
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))


def test_ode_residual_examples():
    assert np.max(density_ode_residual(EnsembleSpec("GUE", 1, 1.0), np.linspace(-3, 3, 13))) < 1e-15
    assert density_ode_residual(EnsembleSpec("GUE", 5, 0.5), 0.7) < 1e-9
    assert density_ode_residual(EnsembleSpec("GOE", 4, 0.5), 1.1) < 1e-9


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("n", [1, 6, 12])
def test_ode_residual_grid(kind, n):
    for s2 in (0.5, 1 / n):
        spec = EnsembleSpec(kind, n, s2)
        R = quadrature_window(spec)
        assert np.max(density_ode_residual(spec, np.linspace(-R, R, 101))) < 1e-9


def test_gse_ode_as_printed_fails():
    x = np.linspace(-3, 3, 25)
    assert np.max(density_ode_residual(EnsembleSpec("GSE", 3, 0.5), x, gse_rhs="as_printed")) > 1e-2
    with pytest.raises(ValueError):
        density_ode_residual(EnsembleSpec("GSE", 3, 0.5), x, gse_rhs="other")


def test_tau_ode_examples():
    assert tau_ode_residual(1, 0.0) < 1e-10
    assert tau_ode_residual(2, 0.5) < 1e-9
    assert tau_ode_residual(3, -1.4) < 1e-9 and tau_ode_residual(3, 1.4) < 1e-9


def test_alpha_denominator_two_routes():
    for m in range(0, 31, 2):
        assert hermite_fn_integral(m) == pytest.approx(hermite_fn_integral_quadrature(m), abs=1e-10)
    assert hermite_fn_integral(3) == 0.0


def test_alpha_integrates_to_one_for_odd_n():
    for n in (1, 3, 7):
        val, _ = integrate.quad(lambda x: float(alpha_eval(n, x)), -np.inf, np.inf, epsabs=1e-13)
        assert val == pytest.approx(1.0, abs=1e-10)
    assert np.all(alpha_eval(4, np.linspace(-1, 1, 5)) == 0)


def test_integrate_against_examples():
    for n in (2, 5, 10):
        spec = EnsembleSpec("GUE", n, 1 / n, "probability")
        assert integrate_against(spec, Poly([1])) == pytest.approx(1.0, abs=1e-10)
        assert integrate_against(spec, Poly.monomial(2)) == pytest.approx(1.0, abs=1e-9)
    assert integrate_against(EnsembleSpec("GUE", 2, 0.5, "probability"), Poly.monomial(4)) == pytest.approx(2.25, abs=1e-9)
    with pytest.raises(ValueError):
        integrate_against(EnsembleSpec("GUE", 2), Poly.monomial(65))


def test_quadrature_failure_reported():
    with pytest.raises(QuadratureError):
        _adaptive_gl(lambda x: np.sign(np.sin(1e4 * x)), 0.1, 1.0, rtol=1e-14, max_levels=3)


def test_semicircle_limit():
    pts = np.array([0.0, 1.0, 1.9])
    dens = density_eval(EnsembleSpec("GUE", 200, 1 / 200, "probability"), pts)
    assert np.max(np.abs(dens - np.sqrt(4 - pts**2) / (2 * math.pi))) < 2e-2
