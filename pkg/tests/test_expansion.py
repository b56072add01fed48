from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ensemble_spectra.densities import EnsembleSpec, integrate_against
from ensemble_spectra.expansion import (
    _aux_lhs,
    _q_of,
    _Field,
    bounded_seed,
    default_truncation,
    expansion_prefactor,
    gse_goe_expand,
    gue_expand,
    op_S,
    op_T,
    resolve_seeds,
    semicircle_average,
    solve_aux_f,
    stepdiff_identity_residual,
)
from ensemble_spectra.mgf import moments_from_mgf
from ensemble_spectra.poly import Poly
from ensemble_spectra.verify import harer_zagier_moments

coef = st.fractions(min_value=-10, max_value=10, max_denominator=20)
polys = st.lists(coef, max_size=11).map(Poly)
x = Poly.x()


def test_op_S_examples():
    assert op_S(Poly([1])) == Poly()
    assert op_S(Poly.monomial(2)) == Poly([0, Fraction(1, 4)])
    assert op_S(Poly.monomial(4)) == Poly([0, Fraction(1, 2), 0, Fraction(1, 6)])


def test_op_T_examples():
    assert op_T(Poly.monomial(2)) == Poly()
    assert op_T(Poly.monomial(4)) == Poly([1])
    assert op_T(Poly([1])) == Poly()


@given(polys)
def test_op_S_defining_identity(g):
    f = op_S(g)
    lhs = (x * x - 4) * f.deriv() + 3 * x * f + semicircle_average(g) - g
    assert lhs == Poly()


@given(st.lists(coef, max_size=9).map(Poly), st.lists(coef, max_size=9).map(Poly), coef, coef)
def test_op_S_linear(g1, g2, a, b):
    assert op_S(g1 * a + g2 * b) == op_S(g1) * a + op_S(g2) * b


@given(st.lists(coef, max_size=9))
def test_parity_and_degree_law(cs):
    g = Poly(cs)
    even = Poly([c if k % 2 == 0 else 0 for k, c in enumerate(g.coeffs)])
    odd = g - even
    assert op_S(even).is_odd() and op_S(odd).is_even()
    assert op_T(even).is_even() and op_T(odd).is_odd()
    if g.degree >= 4:
        assert op_T(g).degree == g.degree - 4


def test_op_S_float_mode():
    g = Poly([0.5, 0, 1.25, 0, 3.0])
    exact = op_S(Poly([Fraction(1, 2), 0, Fraction(5, 4), 0, Fraction(3)]))
    assert [float(c) for c in op_S(g).coeffs] == pytest.approx([float(c) for c in exact.coeffs])


def test_gue_expand_examples():
    for n in (1, 4, 9):
        rep = gue_expand(Poly.monomial(2), n)
        assert rep.exact_terms == (1,)
    assert sum(gue_expand(Poly.monomial(4), 2).exact_terms) == Fraction(9, 4)
    assert gue_expand(Poly.monomial(4), 2).exact_terms == (2, Fraction(1, 4))
    assert sum(gue_expand(Poly.monomial(6), 3).exact_terms) == 5 + Fraction(10, 9)


@pytest.mark.parametrize("deg", range(0, 13))
def test_gue_expand_term_count(deg):
    assert len(gue_expand(Poly.monomial(deg), 3).terms) == deg // 4 + 1


@pytest.mark.parametrize("n", range(1, 9))
def test_gue_expand_matches_oracles(n):
    hz = harer_zagier_moments(n, 5)
    mgf = moments_from_mgf("GUE", n, Fraction(1, n), 10, normalization="probability")
    for m in range(1, 6):
        val = sum(gue_expand(Poly.monomial(2 * m), n).exact_terms)
        assert val == hz[m] == mgf[2 * m]


def test_harer_zagier_oracle_small_cases():
    assert harer_zagier_moments(1, 4) == [1, 1, 3, 15, 105]
    assert harer_zagier_moments(2, 2)[2] == Fraction(9, 4)


def test_solve_aux_f_example():
    f = solve_aux_f(Poly.monomial(2), 1, "GSE", D=40, seeds="zero").poly
    h = f.deriv()
    assert h[2] == 0 and h[3] == 0
    assert h[4] == Fraction(-1, 48)
    assert h[6] == Fraction(1, 576)
    assert solve_aux_f(Poly(), 5, "GOE", D=40, seeds="zero").poly == Poly()


@settings(deadline=None, max_examples=25)
@given(g=st.lists(coef, max_size=7).map(Poly), n=st.integers(1, 10), kind=st.sampled_from(["GSE", "GOE"]))
def test_solve_aux_f_satisfies_equation(g, n, kind):
    D = 60
    f = solve_aux_f(g, n, kind, D=D, seeds="zero").poly
    assert _aux_lhs(f, n, kind).truncate(D - 2) == g


def test_solve_aux_f_parity():
    f = solve_aux_f(Poly([1, 0, 3, 0, -2]), 6, "GSE", D=60, seeds="zero").poly
    assert f.is_odd() and f.deriv().is_even()


def test_solve_aux_f_rejects_small_truncation():
    with pytest.raises(ValueError):
        solve_aux_f(Poly.monomial(6), 3, "GSE", D=10)


def test_extended_precision_matches_exact():
    g = Poly.monomial(4)
    exact = gse_goe_expand(g, 10, "GSE", reference=False)
    approx = gse_goe_expand(g, 10, "GSE", precision_bits=600, reference=False)
    assert approx.partials == pytest.approx(exact.partials, rel=1e-12)


def test_prefactors():
    assert expansion_prefactor(10, "GOE") == 3
    assert expansion_prefactor(10, "GSE") == Fraction(63, 20)
    assert expansion_prefactor(10, "GSE", "as_printed") == Fraction(3, 2)
    with pytest.raises(ValueError):
        expansion_prefactor(10, "GSE", "other")


def test_zeroth_term_is_prefactor_times_average():
    g, n = Poly.monomial(2), 10
    rep = gse_goe_expand(g, n, "GOE", J=0, reference=False)
    seeds = resolve_seeds(g, n, "GOE")
    f = solve_aux_f(g, n, "GOE", seeds=seeds).poly
    q = _q_of(f, n, _Field(None))
    assert rep.partials[0] == pytest.approx(float(3 * semicircle_average(q)), rel=1e-14)


@pytest.mark.parametrize("kind", ["GSE", "GOE"])
def test_n20_examples(kind):
    rep = gse_goe_expand(Poly.monomial(2), 20, kind)
    assert rep.error < 1e-4
    assert not rep.diagnostics["divergent"]


@pytest.mark.parametrize("kind", ["GSE", "GOE"])
def test_as_printed_prefactor_misses_reference(kind):
    rep = gse_goe_expand(Poly.monomial(2), 10, kind, convention="as_printed")
    assert rep.error > 0.1


def test_goe_seed_policies():
    g, n = Poly.monomial(2), 10
    assert float(bounded_seed(g, n, "GOE")) == pytest.approx(-1718 / 315, rel=1e-12)
    zero = gse_goe_expand(g, n, "GOE", seeds="zero")
    bounded = gse_goe_expand(g, n, "GOE", seeds="bounded")
    assert zero.error > 1e-2
    assert bounded.error < 1e-5
    with pytest.raises(ValueError):
        bounded_seed(g, 9, "GOE")
    with pytest.raises(ValueError):
        resolve_seeds(g, n, "GOE", "other")


def test_doubling_diagnostic():
    rep = gse_goe_expand(Poly.monomial(4), 10, "GOE", check_doubling=True)
    assert rep.diagnostics["doubling_shift"] < 1e-6
    assert rep.as_dict()["trunc_degree"] == default_truncation(Poly.monomial(4), 10)


def test_reference_is_quadrature():
    rep = gse_goe_expand(Poly.monomial(2), 10, "GSE")
    ref = integrate_against(EnsembleSpec("GSE", 10, 0.1, "probability"), Poly.monomial(2))
    assert rep.reference == ref
    assert rep.reference == pytest.approx(2 - 1 / 10, rel=1e-10)


def test_stepdiff_examples():
    assert stepdiff_identity_residual(Poly(), 10, "GSE") == 0.0
    for kind in ("GSE", "GOE"):
        assert stepdiff_identity_residual(Poly.monomial(2), 10, kind) < 1e-5
    with pytest.raises(ValueError):
        stepdiff_identity_residual(Poly.monomial(2), 4, "GOE", lhs_mode="other")


def test_stepdiff_as_printed_prefactor_fails():
    assert stepdiff_identity_residual(Poly.monomial(2), 4, "GOE", convention="as_printed") > 1e-2
