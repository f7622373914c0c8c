"""Acceptance criteria, one test per criterion.

Each criterion is a plain function returning ``(ok, detail)``; the wrapper
times it against its budget, prints a PASS/FAIL line and records it for the
terminal summary (see ``conftest.py``).  Run this file directly to get the
lines without pytest.
"""

import sys
import time
from fractions import Fraction
from itertools import chain, combinations, product

import pytest

from kncasimir import casimir as cas
from kncasimir.fock import FockConfig, identity
from kncasimir.jets import MINUS, PLUS, residue
from kncasimir.pairing import vector_cocycle
from kncasimir.sugawara import (l_coefficient, l_coeffs, sl2_basis, sugawara_commutator_defect,
                                sugawara_config, virasoro_defect)
from kncasimir.surface import Genus0Surface, SurfaceSpec, make_surface

from oracles import boson_virasoro_central

RESULTS = []
THIRD = Fraction(1, 3)
S0 = Genus0Surface()


def fmt_field(f):
    return "{" + ", ".join(f"e_{m}: {c}" for m, c in sorted(f.items())) + "}"


def record(number, title, budget, fn):
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # reported as a failure with the cause
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    dt = time.perf_counter() - t0
    within = dt < budget
    status = "PASS" if ok and within else "FAIL"
    timing = f"{dt:.1f}s/{budget}s" + ("" if within else " over budget")
    line = f"{status} [{number:2d}] {title} ({timing}) {detail}"
    RESULTS.append(line)
    print(line)
    return ok and within, line


# -- 1 ---------------------------------------------------------------------------

def duality_genus0():
    bad = []
    for m, n in product(range(-20, 21), repeat=2):
        d = 1 if m == n else 0
        if residue(S0.function(m) * S0.oneform(n)) != d:
            bad.append(("A", m, n))
        if residue(S0.vector(m) * S0.quadratic(n)) != d:
            bad.append(("e", m, n))
    return not bad, f"41x41 pairs per family exact, violations={bad[:3]}"


# -- 2 ---------------------------------------------------------------------------

def duality_genus1():
    T = make_surface(SurfaceSpec(genus=1, precision_bits=192))
    worst = 0
    worst_res = 0
    for m, n in product(range(-4, 5), repeat=2):
        d = 1 if m == n else 0
        for t in (T.function(m) * T.oneform(n), T.vector(m) * T.quadratic(n)):
            worst = max(worst, abs(residue(t) - d))
            worst_res = max(worst_res, abs(residue(t, PLUS) + residue(t, MINUS)))
    ok = worst < 1e-25 and worst_res < 1e-25
    return ok, f"max duality error {float(worst):.1e}, max residue-sum {float(worst_res):.1e}"


# -- 3 ---------------------------------------------------------------------------

def sugawara_coefficients():
    bad = []
    W = 8
    for k in range(-6, 7):
        got = l_coeffs(S0, k, window=W)
        want = {(n, k - n): 1 for n in range(-W, W + 1) if abs(k - n) <= W}
        if got != want:
            bad.append(k)
    T = make_surface(SurfaceSpec(genus=1))
    band_bad = []
    for k in range(-1, 5):
        for n, m in product(range(1, 5), repeat=2):
            v = l_coefficient(T, k, n, m)
            if abs(v) > 1e-20 and not k <= n + m <= k + 1:
                band_bad.append((k, n, m))
    return not bad and not band_bad, f"genus-0 delta failures={bad}, genus-1 band violations={band_bad[:3]}"


# -- 4 ---------------------------------------------------------------------------

def commutator_identity():
    bad, states = [], 0
    for alg, l, basis in (("gl1", 1, [identity(1)]), ("sl2", 2, sl2_basis())):
        cfg = sugawara_config(alg, FockConfig(l, 0, (), 12))
        if cfg.level != 1:
            bad.append((alg, "level", cfg.level))
        for x, k, r in product(basis, range(-4, 5), range(-4, 5)):
            rep = sugawara_commutator_defect(cfg, k, r, x)
            states += rep["tested"]
            if not rep["zero"] or not rep["tested"]:
                bad.append((alg, k, r))
    return not bad, f"{states} monomial checks, nonzero defects={bad[:3]}"


# -- 5 ---------------------------------------------------------------------------

def virasoro_central_term():
    cfg = sugawara_config("gl1", FockConfig(1, 0, (), 12))
    rep = virasoro_defect(cfg, 2, -2)
    oracle = boson_virasoro_central(2, -2)
    vc = vector_cocycle(S0.vector(2), S0.vector(-2))
    const = oracle / vc
    ok = vc == 6 and rep["value"] == oracle and rep["ratio"] == const
    # same constant for every k, and nothing off the diagonal
    for k in (1, 3):
        r = virasoro_defect(cfg, k, -k)
        ok &= r["value"] == const * vector_cocycle(S0.vector(k), S0.vector(-k))
    off = [(k, m) for k, m in ((2, -1), (1, 1), (3, -1), (2, 2), (-2, 1)) if virasoro_defect(cfg, k, m)["value"] != 0]
    ok &= not off
    return ok, (f"defect {rep['value']} = {const} x vector_cocycle {vc}; prefactor {rep['prefactor']}, "
                f"oracle {oracle}; off-diagonal nonzero={off}")


# -- 6 ---------------------------------------------------------------------------

def generic_fock(window=14):
    return FockConfig(1, -1, THIRD, window)


def triangular_pattern():
    tab = cas.gamma_table_measured(generic_fock(10), 4)
    pivots = [k for k in range(-4, 5) if k and tab.get(k, k) == 0]
    upper = [(k, m) for k in range(-4, 5) for m in range(k + 1, 5) if tab.get(k, m) != 0]
    consts = [m for m in range(-4, 5) if tab.get(0, m) != 0]
    ok = not pivots and not upper and not consts
    return ok, f"zero pivots={pivots}, nonzero above diagonal={upper[:3]}, nonzero on A_0={consts}"


# -- 7 ---------------------------------------------------------------------------

def unique_casimir():
    O = 6
    fock = generic_fock(2 * O + 2)
    tab = cas.gamma_table_measured(fock, O)
    sol = cas.casimir_triangular(tab, O)
    ok = sol.dimension == 1 and sol.a[0] == 1 and sol.leading_order == 1
    ok &= all(sol.a[m] == 0 for m in sol.a if m < 0) and sol.forced_zero == list(range(-O, 0))
    cfg = sugawara_config("gl1", fock.with_window(8))
    sweep = cas.commutator_sweep(sol.field(), cfg, list(range(-5, 6)), [identity(1)], order=O)
    ok &= sweep["ok"]
    return ok, (f"dimension {sol.dimension}, field {fmt_field(sol.field())}, ord {sol.leading_order}, "
                f"sweep |k|<=5 tested {sweep['tested']} failures {len(sweep['failures'])}")


# -- 8 ---------------------------------------------------------------------------

def two_routes():
    O = 8
    tab = cas.gamma_table_measured(generic_fock(2 * O + 2), O)
    tri = cas.casimir_triangular(tab, O)
    fit = cas.extract_aT(tab, 2)
    ode = cas.casimir_ode(fit["a"], fit["T"], O)
    agree = cas.routes_agree(tri, ode, O)
    ok = agree["agree"] and agree["compared_up_to"] == O
    # eps_{-1}, eps_0 are the coefficients of e_{-2}, e_{-1}
    ok &= ode.a[-2] == 0 and ode.a[-1] == 0 and {-2, -1} <= set(ode.forced_zero)
    special = cas.casimir_ode(1, {-1: Fraction(-5, 7)}, O)
    ok &= special.field() == {0: 1}
    return ok, (f"fit a={fit['a']} ord T={fit['ord_T']}, agree to {agree['compared_up_to']}, "
                f"mismatches {agree['mismatches']}, pure pole gives {fmt_field(special.field())}")


# -- 9 ---------------------------------------------------------------------------

def semicasimirs():
    O = 6
    fock = generic_fock(2 * O + 2)
    tab = cas.gamma_table_measured(fock, O)
    full = [0, -1, -2, -3]
    bad_dim = []
    for S in chain.from_iterable(combinations(full, r) for r in range(len(full) + 1)):
        if cas.semicasimir_solve(S, tab, O).dimension != len(S):
            bad_dim.append(S)
    basis = cas.semicasimir_solve(full, tab, O)
    cfg = sugawara_config("gl1", fock.with_window(8))
    bad_sweep, tested = [], 0
    for j, f in sorted(basis.fields.items()):
        sw = cas.commutator_sweep(f, cfg, list(range(-5, 0)), [identity(1)], order=O)
        tested += sw["tested"]
        if not sw["ok"]:
            bad_sweep.append(j)
    same = basis.fields[0] == cas.casimir_triangular(tab, O).field()
    ok = not bad_dim and not bad_sweep and same
    return ok, (f"dimension mismatches {bad_dim}, sweep failures {bad_sweep} over {tested} states, "
                f"Gamma(e_0) is the casimir: {same}")


# -- 10 --------------------------------------------------------------------------

def coinvariants_gl1():
    O = 6
    fock = FockConfig(1, 0, THIRD, 2 * O + 2)
    tab = cas.gamma_table_measured(fock, O)
    sb = cas.semicasimir_solve(range(0, -O, -1), tab, O)
    cas_field = cas.casimir_triangular(tab, O).field()
    ok, parts = True, []
    for D in (6, 7):
        cfg = sugawara_config("gl1", fock.with_window(D))
        rep = cas.coinvariants(cfg, D, sb, casimir=cas_field)
        induced = rep.induced[0]
        deeper = [j for j in rep.induced if rep.first_dead_index is not None and j <= rep.first_dead_index]
        dead_ok = rep.p is not None and all(all(c == 0 for row in rep.induced[j] for c in row) for j in deeper)
        ok &= rep.dimension == 1 and rep.stable and induced == [[rep.vacuum_eigenvalue]] and dead_ok
        parts.append(f"D={D}: dim {rep.dimension} (prev {rep.previous_dimension}), "
                     f"induced casimir {induced[0][0]} vs vacuum {rep.vacuum_eigenvalue}, p={rep.p}")
    return ok, "; ".join(parts)


# -- 11 --------------------------------------------------------------------------

def gl2_ablation():
    fock = FockConfig(2, -1, (THIRD, THIRD), 6)
    full = sugawara_config("gl2", fock)
    cut = sugawara_config("gl2", fock, abelian_part=False)
    traceless = sl2_basis()
    pairs = [(m, k) for m, k in product(range(-2, 3), repeat=2) if k]
    bad = []
    for m, k in pairs:
        for x in traceless:
            if cas.central_commutator({m: 1}, full, k, x) != 0:
                bad.append(("traceless", m, k))
        rep = cas.central_defect_check(full, m, k, identity(2))
        if not rep["ok"]:
            bad.append(("identity", m, k))
    ablated = [cas.central_defect_check(cut, m, k, identity(2)) for m, k in pairs]
    nonzero = sum(1 for r in ablated if not r["ok"])
    ok = not bad and nonzero > 0
    return ok, (f"composite violations {bad[:3]} over {len(pairs)} (m,k) pairs; "
                f"ablated central-x defect nonzero on {nonzero}/{len(pairs)} pairs")


CRITERIA = [
    (1, "genus-0 duality exact", 1, duality_genus0),
    (2, "genus-1 duality and residue theorem", 30, duality_genus1),
    (3, "Sugawara coefficients", 10, sugawara_coefficients),
    (4, "current commutator identity", 60, commutator_identity),
    (5, "Virasoro central term", 60, virasoro_central_term),
    (6, "measured cocycle pattern", 60, triangular_pattern),
    (7, "unique casimir and commutativity", 120, unique_casimir),
    (8, "two-route agreement", 30, two_routes),
    (9, "semi-casimirs", 120, semicasimirs),
    (10, "coinvariants gl(1)", 120, coinvariants_gl1),
    (11, "gl(2) composite vs ablation", 180, gl2_ablation),
]


@pytest.mark.parametrize("number,title,budget,fn", CRITERIA, ids=[f"c{n:02d}" for n, *_ in CRITERIA])
def test_criterion(number, title, budget, fn):
    ok, line = record(number, title, budget, fn)
    assert ok, line


if __name__ == "__main__":
    results = [record(*c)[0] for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
