from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from kncasimir.casimir import (CasimirSolution, GammaTable, InconsistentFit, casimir_ode,
                               casimir_triangular, central_defect_check, coinvariants,
                               commutator_sweep, delta_operator, extract_aT, gamma_map,
                               gamma_table, induced_rank, routes_agree, semicasimir_ode,
                               semicasimir_solve, SemiCasimirBasis)
from kncasimir.fock import (FockConfig, Monomial, current_operator, identity, matrix, vacuum,
                            vectorfield_operator)
from kncasimir.jets import PLUS, Series
from kncasimir.pairing import Connection, mixed_cocycle
from kncasimir.surface import Genus0Surface
from kncasimir.sugawara import sugawara_config

THIRD = Fraction(1, 3)
SPHERE = Genus0Surface()
TAU = {-1: Fraction(-2, 3), 0: Fraction(1), 1: Fraction(2), 3: Fraction(-1, 5)}


@pytest.fixture(scope="module")
def generic():
    """gl(1) at charge -1 with twist 1/3."""
    return sugawara_config("gl1", FockConfig(1, -1, THIRD, 14))


@pytest.fixture(scope="module")
def measured(generic):
    return gamma_table("measured", 6, fock=generic.fock)


def _copy(table, **changes):
    vals = dict(table.values)
    vals.update(changes.get("values", {}))
    return GammaTable(table.source, vals, table.k_range, table.m_range).certify()


# -- gamma tables ---------------------------------------------------------------

def test_analytic_table_entry():
    t = Fraction(2, 7)
    tab = gamma_table("analytic", 3, a=1, tau={-1: t})
    # rows hold the (A, e) orientation, the opposite of mixed_cocycle(e, A)
    assert mixed_cocycle(SPHERE.vector(-1), SPHERE.function(1), 1, Connection(Series.monomial(PLUS, -1, t))) == t
    assert tab.get(-1, -1) == -t


def test_measured_table_pattern(measured):
    for m in range(-6, 7):
        assert measured.get(0, m) == 0
    assert measured.get(2, 3) == 0
    for k in range(-4, 5):
        if k:
            assert measured.get(k, k) != 0
        for m in range(k + 1, 7):
            assert measured.get(k, m) == 0
    assert measured.is_triangular and measured.degenerate == []


def test_table_json(measured):
    doc = measured.to_json()
    assert doc["source"] == "measured" and doc["triangular"]
    assert all("/" in row["value"] for row in doc["values"])


def test_gamma_table_bad_source():
    with pytest.raises(ValueError):
        gamma_table("guess", 3)
    with pytest.raises(ValueError):
        gamma_table("measured", 3)


# -- triangular route -------------------------------------------------------------

def test_triangular_on_pure_pole():
    tab = gamma_table("analytic", 6, a=1, tau={-1: Fraction(3, 5)})
    sol = casimir_triangular(tab, 6)
    assert sol.field() == {0: 1}
    assert sol.dimension == 1 and sol.leading_order == 1
    assert sol.forced_zero == list(range(-6, 0))


def test_triangular_measured(measured):
    sol = casimir_triangular(measured, 6)
    assert sol.field() == {0: 1}
    assert sol.dimension == 1 and not sol.degenerate_pivots and not sol.inconsistent


def test_triangular_reports_degenerate_pivot(measured):
    bad = _copy(measured, values={(2, 2): Fraction(0)})
    assert bad.degenerate == [2]
    sol = casimir_triangular(bad, 4)
    assert sol.degenerate_pivots == [2]
    assert sol.dimension == 2


def test_triangular_window_too_small(measured):
    with pytest.raises(ValueError):
        casimir_triangular(measured, 9)


# -- ODE route -----------------------------------------------------------------------

def test_ode_pure_pole():
    sol = casimir_ode(1, {-1: Fraction(2, 7)}, 6)
    assert sol.field() == {0: 1}
    assert sol.forced_zero == [-3, -2, -1]


def test_ode_second_coefficient():
    t1, t0 = Fraction(1, 2), Fraction(1, 3)
    sol = casimir_ode(1, {-1: t1, 0: t0}, 4)
    assert sol.a[1] == t0 / (2 - t1)
    assert sol.a[-1] == 0 and sol.a[-2] == 0


def test_ode_degenerate_T_zero():
    sol = casimir_ode(1, {}, 3)
    assert sol.field() == {0: 1}
    assert sol.degenerate_pivots == [-1]
    assert sol.dimension == 2


def test_ode_rejects_double_pole():
    with pytest.raises(ValueError):
        casimir_ode(1, {-2: 1}, 3)


def test_routes_agree_analytic():
    tab = gamma_table("analytic", 6, a=Fraction(1, 2), tau=TAU)
    tri = casimir_triangular(tab, 5)
    ode = casimir_ode(Fraction(1, 2), TAU, 5)
    rep = routes_agree(tri, ode, 5)
    assert rep["agree"] and rep["compared_up_to"] == 5
    assert tri.a[1] != 0


@settings(max_examples=25, deadline=None)
@given(st.fractions(-3, 3, max_denominator=4), st.dictionaries(st.integers(-1, 3), st.fractions(-2, 2, max_denominator=5), max_size=4))
def test_routes_agree_property(a, tau):
    order = 4
    assume(a != 0)
    t1 = tau.get(-1, 0)
    assume(all(a * j != t1 for j in range(-2, order + 2) if j != 1))
    tab = gamma_table("analytic", order + 1, a=a, tau=tau)
    tri = casimir_triangular(tab, order)
    ode = casimir_ode(a, tau, order)
    assert routes_agree(tri, ode, order)["agree"]


def test_routes_agree_rescales_and_reports():
    s1 = CasimirSolution("x", {0: Fraction(1), 1: Fraction(2)}, 3, 1)
    s2 = CasimirSolution("y", {0: Fraction(3), 1: Fraction(6), 4: Fraction(9)}, 4, 1)
    assert routes_agree(s1, s2, 5) == {"agree": True, "compared_up_to": 3, "mismatches": []}
    s3 = CasimirSolution("z", {0: Fraction(1), 1: Fraction(5)}, 3, 1)
    assert routes_agree(s1, s3, 3)["mismatches"] == [1]


# -- extraction ---------------------------------------------------------------------

def test_extract_roundtrip():
    t = Fraction(-4, 9)
    fit = extract_aT(gamma_table("analytic", 5, a=1, tau={-1: t}), 2)
    assert fit["a"] == 1 and fit["tau"] == {-1: t} and fit["ord_T"] == -1
    fit = extract_aT(gamma_table("analytic", 6, a=Fraction(1, 2), tau=TAU), 3)
    assert fit["a"] == Fraction(1, 2) and fit["tau"] == TAU


def test_extract_measured(measured):
    fit = extract_aT(measured, 2)
    assert fit["ord_T"] == -1
    assert fit["a"] == Fraction(1, 2) and fit["tau"] == {-1: THIRD - 1}


def test_extract_rejects_nonconstant_pairing(measured):
    bad = _copy(measured, values={(0, 1): Fraction(1)})
    with pytest.raises(InconsistentFit):
        extract_aT(bad, 2)


def test_extract_window_check():
    with pytest.raises(ValueError):
        extract_aT(gamma_table("analytic", 1, a=1, tau={}), 2)


def test_measured_fit_feeds_ode(measured):
    fit = extract_aT(measured, 2)
    ode = casimir_ode(fit["a"], fit["T"], 6)
    assert routes_agree(casimir_triangular(measured, 6), ode, 6)["agree"]


# -- semi-casimirs -----------------------------------------------------------------

def test_semicasimir_dimension(measured):
    for S in ([0], [0, -1], [-1, -3], [0, -1, -2, -3]):
        basis = semicasimir_solve(S, measured, 6)
        assert basis.dimension == len(S)
    assert semicasimir_solve([0], measured, 6).fields[0] == casimir_triangular(measured, 6).field()


def test_gamma_map_rejects_positive(measured):
    with pytest.raises(ValueError):
        gamma_map(1, measured, 4)


def test_semicasimir_ode_recursion():
    t1, t0 = Fraction(1, 2), Fraction(1, 3)
    src = Fraction(5)
    eps = semicasimir_ode(1, {-1: t1, 0: t0}, {-3: src}, 4)
    assert -2 * eps[-1] * (1 + t1) == src
    assert eps[1] == 0
    with pytest.raises(ValueError):
        semicasimir_ode(1, {}, {-1: 1}, 3)


def test_semicasimir_routes_agree():
    """An ODE solution with a pole source lies in the span of the table-route images."""
    a, order = Fraction(1, 2), 5
    tab = gamma_table("analytic", 7, a=a, tau=TAU)
    eps = semicasimir_ode(a, TAU, {-2: 1, -4: Fraction(2, 3)}, order)
    field = {j - 1: c for j, c in eps.items() if c}
    combo = {}
    for m, c in field.items():
        if m <= 0:
            g, _ = gamma_map(m, tab, order)
            for n, v in g.items():
                combo[n] = combo.get(n, 0) + c * v
    combo = {n: v for n, v in combo.items() if v}
    assert {m: c for m, c in field.items() if m <= order} == combo
    # and it satisfies every positive row
    for k in range(1, order + 1):
        assert sum(c * tab.get(k, m) for m, c in field.items()) == 0


# -- Delta and commutativity ---------------------------------------------------------

def test_delta_annihilates_vacuum():
    cfg = sugawara_config("gl1", FockConfig(1, 0, (), 8))
    vac = vacuum(cfg.fock)
    for m in (1, 2, 3):
        assert delta_operator({m: 1}, cfg).apply(vac).is_zero()
    assert delta_operator({}, cfg).apply(vac).is_zero()
    assert delta_operator({0: 0}, cfg).apply_monomial(Monomial.from_partition(0, (1,))) == {}


def test_delta_e0_vacuum_eigenvalue(generic):
    vac = vacuum(generic.fock)
    (mono,) = vac.terms
    e0 = vectorfield_operator(0, generic.fock).apply_monomial(mono)[mono]
    q = current_operator(identity(1), 0, generic.fock).apply_monomial(mono)[mono]
    # normalized L_0 on a charged vacuum is -q^2/2
    assert delta_operator({0: 1}, generic).apply_monomial(mono) == {mono: e0 + q * q / 2}
    assert e0 + q * q / 2 == Fraction(-7, 6)


def test_casimir_commutes(generic):
    rep = commutator_sweep({0: 1}, generic, range(-3, 4), [identity(1)], count=12)
    assert rep["ok"] and rep["tested"] > 0


def test_noncasimir_fails_sweep(generic):
    rep = commutator_sweep({1: 1}, generic, [-1], [identity(1)], count=6)
    assert not rep["ok"] and rep["failures"][0]["k"] == -1


def test_central_defect_gl2():
    cfg = sugawara_config("gl2", FockConfig(2, -1, (THIRD, THIRD), 5))
    h = matrix([[1, 0], [0, -1]])
    for m, k in ((-1, 1), (1, -1), (2, -1)):
        assert central_defect_check(cfg, m, k, h)["ok"]
        rep = central_defect_check(cfg, m, k, identity(2))
        assert rep["ok"] and rep["scalar"]
    assert central_defect_check(cfg, -1, 1, identity(2))["value"] == Fraction(4, 3)


def test_central_defect_ablation_nonscalar():
    cfg = sugawara_config("gl2", FockConfig(2, -1, (THIRD, THIRD), 5), abelian_part=False)
    rep = central_defect_check(cfg, 2, -1, identity(2))
    assert not rep["ok"] and not rep["scalar"]


# -- coinvariants ------------------------------------------------------------------

def test_coinvariants_gl1_charge0():
    cfg = sugawara_config("gl1", FockConfig(1, 0, THIRD, 6))
    rep = coinvariants(cfg, 6)
    assert rep.dimension == 1 and rep.stable
    assert rep.representatives == [Monomial.vacuum(0)]
    vac = Monomial.vacuum(0)
    expect = delta_operator({0: 1}, cfg).apply_monomial(vac).get(vac, 0)
    assert rep.vacuum_eigenvalue == expect


def test_coinvariants_with_semicasimirs():
    fock = FockConfig(1, -1, THIRD, 14)
    cfg = sugawara_config("gl1", fock)
    basis = semicasimir_solve([0, -1, -2, -3], gamma_table("measured", 6, fock=fock), 6)
    rep = coinvariants(cfg, 5, semibasis=basis)
    assert rep.dimension == 1 and rep.stable
    assert rep.p is not None and rep.first_dead_index is not None
    assert induced_rank(basis, rep) <= 1
    assert rep.to_json()["p"] == rep.p


def test_coinvariants_bad_window():
    cfg = sugawara_config("gl1", FockConfig(1, 0, (), 4))
    with pytest.raises(ValueError):
        coinvariants(cfg, 0)


def test_induced_rank_empty():
    cfg = sugawara_config("gl1", FockConfig(1, 0, (), 4))
    rep = coinvariants(cfg, 3)
    assert induced_rank(SemiCasimirBasis({}, 3), rep) == 0
