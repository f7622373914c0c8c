from fractions import Fraction

import mpmath
import pytest

from kncasimir.jets import INF, MINUS, PLUS, Series, leading_order, residue
from kncasimir.surface import (BasisWindow, Genus0Surface, SurfaceError, SurfaceSpec,
                               basis_function, basis_oneform, basis_quadratic, basis_vector,
                               combine, make_surface, parse_config, sigma_coefficients,
                               sigma_series, spec_from_mapping, triple_decompose,
                               weierstrass_p_coefficients)

G0 = SurfaceSpec(genus=0)
G1 = SurfaceSpec(genus=1)


@pytest.fixture(scope="module")
def torus():
    return make_surface(G1)


# -- genus 0 ------------------------------------------------------------------

def test_genus0_function_closed_form():
    A = basis_function(G0, 3)
    assert A.plus.equals(Series.monomial(PLUS, 3))
    assert A.minus.equals(Series.monomial(MINUS, -3))
    one = basis_function(G0, 0)
    assert one.plus.equals(Series.monomial(PLUS, 0)) and one.minus.equals(Series.monomial(MINUS, 0))


def test_genus0_vector_and_forms():
    assert basis_vector(G0, 0).plus.equals(Series.monomial(PLUS, 1))
    e = basis_vector(G0, -2)
    assert e.plus.val == -1
    assert basis_oneform(G0, 1).plus.equals(Series.monomial(PLUS, -2))
    assert basis_quadratic(G0, 0).plus.equals(Series.monomial(PLUS, -2))


def test_genus0_duality_window():
    for m in range(-10, 11):
        for n in range(-10, 11):
            d = 1 if m == n else 0
            assert residue(basis_function(G0, m) * basis_oneform(G0, n)) == d
            assert residue(basis_vector(G0, m) * basis_quadratic(G0, n)) == d


def test_genus0_minus_chart_is_transfer():
    from kncasimir.jets import chart_transfer
    S = Genus0Surface()
    for m in range(-5, 6):
        for fam, w in (("function", 0), ("vector", -1), ("oneform", 1), ("quadratic", 2)):
            t = getattr(S, fam)(m)
            assert chart_transfer(t.plus, w).equals(t.minus)


def test_genus0_expected_orders():
    S = Genus0Surface()
    for m in range(-6, 7):
        for fam in ("function", "vector", "oneform", "quadratic"):
            t = getattr(S, fam)(m)
            assert (t.plus.val, t.minus.val) == S.expected_orders(fam, m)


def test_triple_decompose_genus0():
    A = combine(G0, {3: 2, 0: 5})
    neg, mid, pos = triple_decompose(G0, A)
    assert neg == {} and mid == {0: 5} and pos == {3: 2}
    assert triple_decompose(G0, Genus0Surface().zero(0)) == ({}, {}, {})


def test_triple_decompose_outside_window():
    with pytest.raises(SurfaceError):
        triple_decompose(G0, basis_function(G0, 20), window=(-3, 3))


def test_window_sizing():
    assert BasisWindow.symmetric(4).required_order(1) == 15
    assert BasisWindow.symmetric(4).required_order(0) == 12


# -- sigma ----------------------------------------------------------------

def test_sigma_leading_term():
    s = sigma_series(4, 1, 12)
    assert s.val == 1 and s.coef(1) == 1
    assert all(s.coef(e) == 0 for e in (2, 3, 4))


def test_sigma_degenerate_lattice():
    s = sigma_series(0, 0, 15)
    assert s.equals(Series.monomial(PLUS, 1).truncate(15))


def test_sigma_is_odd():
    s = sigma_coefficients(Fraction(3), Fraction(-2), 21)
    assert all(s[e] == 0 for e in range(0, 22, 2))


def test_sigma_log_derivative_against_p():
    """(sigma'/sigma)' = -p using an independent check that p solves its ODE."""
    g2, g3 = Fraction(4), Fraction(1)
    K = 24
    s = sigma_series(g2, g3, K)
    zeta = s.derivative() * s.inverse()
    p = -zeta.derivative()
    c = weierstrass_p_coefficients(g2, g3, 8)
    ref = {-2: Fraction(1)}
    for k, ck in enumerate(c, start=2):
        ref[2 * k - 2] = ck
    for e in range(-2, min(p.order, 14) + 1):
        assert p.coef(e) == ref.get(e, 0)
    # p'^2 = 4p^3 - g2 p - g3 on the known range
    P = Series.from_dict(PLUS, ref, 14)
    lhs = P.derivative() * P.derivative()
    rhs = P * P * P * Fraction(4) - P * g2 - Series.monomial(PLUS, 0, g3, 14)
    top = min(lhs.order, rhs.order)
    for e in range(-6, top + 1):
        assert lhs.coef(e) == rhs.coef(e)


# -- genus 1 -------------------------------------------------------------------

def test_genus1_duality(torus):
    for m in range(-4, 5):
        for n in range(-4, 5):
            d = 1 if m == n else 0
            r = residue(torus.function(m) * torus.oneform(n))
            assert abs(r - d) < 1e-25
            r = residue(torus.vector(m) * torus.quadratic(n))
            assert abs(r - d) < 1e-25


def test_genus1_residue_theorem(torus):
    for m in range(-3, 4):
        for n in range(-3, 4):
            t = torus.function(m) * torus.oneform(n)
            assert abs(residue(t, PLUS) + residue(t, MINUS)) < 1e-25


def test_genus1_orders(torus):
    A2 = torus.function(2)
    assert leading_order(A2, PLUS, torus.tol) == 2
    assert leading_order(A2, MINUS, torus.tol) == -3
    for m in range(-4, 5):
        for fam in ("function", "vector", "oneform", "quadratic"):
            t = getattr(torus, fam)(m)
            assert (leading_order(t, PLUS, torus.tol), leading_order(t, MINUS, torus.tol)) == \
                torus.expected_orders(fam, m)


def test_genus1_leading_coefficient_one(torus):
    for m in range(-4, 5):
        A = torus.function(m)
        v = leading_order(A, PLUS, torus.tol)
        assert abs(A.plus.coef(v) - 1) < 1e-40


def test_genus1_special_examples(torus):
    e1 = torus.vector(1)
    assert leading_order(e1, PLUS, torus.tol) == 2
    assert abs(residue(e1 * torus.quadratic(1)) - 1) < 1e-25
    assert abs(residue(torus.vector(2) * torus.quadratic(1))) < 1e-25


def test_genus1_ellipticity(torus):
    w1, w3 = torus.periods()
    ctx = torus.ctx
    for m in (-3, -1, 2, 3):
        for z in (ctx.mpc("0.11", "0.07"), ctx.mpc("-0.2", "0.31")):
            a = torus.function_at(m, z)
            b = torus.function_at(m, z + 2 * w1)
            c = torus.function_at(m, z + 2 * w3)
            assert abs(a - b) < 1e-40 * max(1, abs(a))
            assert abs(a - c) < 1e-40 * max(1, abs(a))


def test_genus1_series_matches_direct_evaluation(torus):
    ctx = torus.ctx
    z = ctx.mpf("0.05")
    for m in (-2, 1, 3):
        s = torus.function(m).plus
        val = sum(c * z ** e for e, c in s.items())
        assert abs(val - torus.function_at(m, z)) < 1e-15


def test_genus1_triple_decompose(torus):
    neg, mid, pos = triple_decompose(torus, torus.function(-1), window=(-5, 5))
    assert set(mid) == {-1} and not neg and not pos


# -- config --------------------------------------------------------------------

def test_config_roundtrip(tmp_path):
    text = "# torus\ngenus=1\ntruncation_order = 30\ng2_re=4\nw_re=0.25\nw_im=0.1\nprecision_bits=128\n"
    spec = spec_from_mapping(parse_config(text))
    assert spec.genus == 1 and spec.truncation_order == 30 and spec.precision_bits == 128
    assert spec.w == complex(0.25, 0.1)


def test_config_rejects_unknown_key():
    with pytest.raises(SurfaceError):
        parse_config("genus=0\nbogus=1\n")


def test_spec_validation():
    with pytest.raises(SurfaceError):
        SurfaceSpec(genus=2)
    with pytest.raises(SurfaceError):
        SurfaceSpec(genus=1, w=0)
    assert SurfaceSpec(genus=0).mode == "exact" and SurfaceSpec(genus=1).mode == "float"
