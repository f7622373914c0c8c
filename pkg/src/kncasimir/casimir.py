"""Casimir and semi-casimir solvers, (a, T) extraction and coinvariants."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .fock import (SPHERE, AlgebraElement, FockConfig, LinComb, Monomial, NonScalarDefect,
                   Operator, _cur, _vf, commutator, identity, matrix, measure_cocycle,
                   monomials, safe_window, scalar_defect, test_states, trace)
from .jets import INF, PLUS, Series
from .linalg import Echelon, solve
from .pairing import Connection, mixed_cocycle
from .sugawara import SugawaraConfig, normalized_T, _window_states


class InconsistentFit(ValueError):
    pass


class WindowUnstable(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Delta_e

def delta_operator(e: dict, config: SugawaraConfig) -> Operator:
    """``Delta_e = e^ - T(e)`` for ``e = sum_m a_m e_m`` given as ``{m: a_m}``."""
    fock = config.fock
    e = {m: Fraction(c) for m, c in e.items() if c}
    if not e:
        return LinComb([])
    terms = [(c, _vf(m, fock)) for m, c in e.items()]
    terms.append((Fraction(-1), normalized_T(config, e)))
    return LinComb(terms)


def truncate_field(e: dict, config: SugawaraConfig, margin: int = 0) -> dict:
    """Drop components that act by zero on the configured window.

    ``e_m`` and ``L_m`` raise the degree by ``m`` powers of z, so components
    with ``m`` beyond the window annihilate every window state.
    """
    top = config.fock.window + margin
    return {m: c for m, c in e.items() if m <= top}


# ---------------------------------------------------------------------------
# gamma tables

@dataclass
class GammaTable:
    """Values ``gamma(A_{-k}, e_m)`` keyed by ``(k, m)``."""

    source: str
    values: dict
    k_range: tuple
    m_range: tuple
    triangular: dict = field(default_factory=dict)
    degenerate: list = field(default_factory=list)

    def get(self, k, m):
        return self.values.get((k, m), Fraction(0))

    def certify(self):
        k0, k1 = self.k_range
        m0, m1 = self.m_range
        self.triangular = {k: all(self.get(k, m) == 0 for m in range(max(k + 1, m0), m1 + 1))
                           for k in range(k0, k1 + 1)}
        self.degenerate = [k for k in range(k0, k1 + 1) if k != 0 and m0 <= k <= m1 and self.get(k, k) == 0]
        return self

    @property
    def is_triangular(self):
        return all(self.triangular.values())

    def to_json(self):
        return {"source": self.source, "k_range": list(self.k_range), "m_range": list(self.m_range),
                "values": [{"k": k, "m": m, "value": _q(v)} for (k, m), v in sorted(self.values.items())],
                "triangular": all(self.triangular.values()), "degenerate_pivots": self.degenerate}


def _q(v) -> str:
    v = Fraction(v)
    return f"{v.numerator}/{v.denominator}"


def gamma_table_measured(fock: FockConfig, window: int, m_window: Optional[int] = None) -> GammaTable:
    m_window = window if m_window is None else m_window
    vals = {}
    x = identity(fock.l)
    for k in range(-window, window + 1):
        for m in range(-m_window, m_window + 1):
            vals[(k, m)] = measure_cocycle(AlgebraElement.current(x, -k), AlgebraElement.field(m), fock)
    return GammaTable("measured", vals, (-window, window), (-m_window, m_window)).certify()


def analytic_T(a, tau: dict, order: int) -> Connection:
    """``T = sum tau_j z^j`` at ``P+`` completed to both charts of the sphere."""
    from .pairing import affine_connection_genus0
    plus = Series.from_dict(PLUS, {j: Fraction(t) for j, t in tau.items()}, INF)
    return affine_connection_genus0(plus, a)


def gamma_table_analytic(a, tau: dict, window: int, m_window: Optional[int] = None) -> GammaTable:
    """``gamma(A_{-k}, e_m) = -res(a f A'' + T f A')`` on the sphere."""
    m_window = window if m_window is None else m_window
    a = Fraction(a)
    T = Connection(Series.from_dict(PLUS, {j: Fraction(t) for j, t in tau.items()}, INF))
    vals = {}
    for k in range(-window, window + 1):
        for m in range(-m_window, m_window + 1):
            vals[(k, m)] = -mixed_cocycle(SPHERE.vector(m), SPHERE.function(-k), a, T)
    return GammaTable("analytic", vals, (-window, window), (-m_window, m_window)).certify()


def gamma_table(source: str, window: int, fock: Optional[FockConfig] = None, a=None, tau=None) -> GammaTable:
    if source == "measured":
        if fock is None:
            raise ValueError("measured table needs a Fock configuration")
        return gamma_table_measured(fock, window)
    if source == "analytic":
        return gamma_table_analytic(a, tau or {}, window)
    raise ValueError(f"unknown source {source!r}")


# ---------------------------------------------------------------------------
# solutions

@dataclass
class CasimirSolution:
    route: str
    a: dict
    certified_order: int
    dimension: int
    degenerate_pivots: list = field(default_factory=list)
    forced_zero: list = field(default_factory=list)
    inconsistent: list = field(default_factory=list)

    def field(self) -> dict:
        return {m: c for m, c in self.a.items() if c}

    @property
    def leading_order(self):
        """Order at ``P+`` of the field ``sum a_m z^{m+1} d/dz``."""
        nz = [m for m, c in self.a.items() if c]
        return min(nz) + 1 if nz else INF

    def to_json(self):
        return {"route": self.route,
                "a": [[str(m), _q(self.a[m])] for m in sorted(self.a) if m >= 0],
                "certified_order": self.certified_order, "dimension": self.dimension,
                "degenerate_pivots": self.degenerate_pivots,
                "forced_zero": self.forced_zero, "inconsistent": self.inconsistent}


def casimir_triangular(table: GammaTable, order: int) -> CasimirSolution:
    """Solve ``sum_m a_m gamma(A_{-k}, e_m) = 0`` for all ``k != 0`` with ``a_0 = 1``."""
    k0, k1 = table.k_range
    m0, m1 = table.m_range
    if order > min(k1, m1):
        raise ValueError(f"table window {min(k1, m1)} smaller than order {order}")
    lo = max(k0, m0)
    a = {}
    degenerate, forced, inconsistent = [], [], []
    dim = 0
    for k in range(lo, order + 1):
        rhs = sum((a[m] * table.get(k, m) for m in range(lo, k)), Fraction(0))
        piv = table.get(k, k)
        if k == 0:
            if rhs != 0:
                inconsistent.append(0)
            a[0] = Fraction(1)
            dim += 1
            continue
        if piv == 0:
            degenerate.append(k)
            if rhs != 0:
                inconsistent.append(k)
            else:
                dim += 1
            a[k] = Fraction(0)
            continue
        a[k] = -rhs / piv
        if k < 0 and a[k] == 0:
            forced.append(k)
    return CasimirSolution("triangular", a, order, dim, degenerate, forced, inconsistent)


def _tau_of(T) -> dict:
    if isinstance(T, dict):
        return {j: Fraction(t) for j, t in T.items() if t}
    if isinstance(T, Connection):
        T = T.plus
    return {e: c for e, c in T.items() if c}


def casimir_ode(a, T, order: int, lowest: int = -3) -> CasimirSolution:
    """Power-series solution of ``a E'' - (E T)' = 0`` with ``E = sum eps_j z^j``.

    Returns coefficients ``a_m = eps_{m+1}`` of ``e = sum a_m e_m`` with
    ``eps_1 = 1``; indices from ``lowest`` are included so the forced zeros
    below ``m = 0`` are visible.
    """
    a = Fraction(a)
    tau = _tau_of(T)
    if tau and min(tau) < -1:
        raise ValueError(f"ord T = {min(tau)} < -1 is outside the solver's hypotheses")
    t_1 = tau.get(-1, Fraction(0))
    eps = {}
    degenerate, forced, inconsistent = [], [], []
    dim = 0
    jlo = lowest + 1
    for j in range(jlo, order + 2):
        rhs = sum((eps[i] * tau.get(j - 1 - i, 0) for i in range(jlo, j)), Fraction(0))
        piv = a * j - t_1
        if j == 1:
            eps[1] = Fraction(1)
            dim += 1
            continue
        if piv == 0:
            degenerate.append(j - 1)
            if rhs != 0:
                inconsistent.append(j - 1)
            else:
                dim += 1
            eps[j] = Fraction(0)
            continue
        eps[j] = rhs / piv
        if j <= 0 and eps[j] == 0:
            forced.append(j - 1)
    coeffs = {j - 1: v for j, v in eps.items()}
    return CasimirSolution("ode", coeffs, order, dim, degenerate, forced, inconsistent)


def routes_agree(s1: CasimirSolution, s2: CasimirSolution, order: int) -> dict:
    """Compare two solutions up to the common certified order after rescaling."""
    top = min(order, s1.certified_order, s2.certified_order)

    def normalized(s):
        nz = sorted(m for m, c in s.a.items() if c and m <= top)
        if not nz:
            return {}
        lead = s.a[nz[0]]
        return {m: c / lead for m, c in s.a.items() if m <= top}

    n1, n2 = normalized(s1), normalized(s2)
    keys = sorted(set(n1) | set(n2))
    mism = [m for m in keys if n1.get(m, 0) != n2.get(m, 0)]
    return {"agree": not mism, "compared_up_to": top, "mismatches": mism}


# ---------------------------------------------------------------------------
# (a, T) extraction

def extract_aT(table: GammaTable, depth: int) -> dict:
    """Exact fit of ``gamma(A_{-k}, e_m) = -a k(k+1) [m = k] + k tau_{k-m-1}``.

    Unknowns are ``a`` and every ``tau_j`` reachable from the table; the fit
    must reproduce every entry.  ``T`` is reported up to ``z**depth``.
    """
    k0, k1 = table.k_range
    m0, m1 = table.m_range
    if min(k1 - k0, m1 - m0) < depth + 2:
        raise ValueError("table window too small for the requested depth")
    rows, rhs = [], []
    taus = set()
    for (k, m), v in table.values.items():
        row = {}
        if k == m and k * (k + 1):
            row["a"] = Fraction(-k * (k + 1))
        if k:
            j = k - m - 1
            row[("tau", j)] = row.get(("tau", j), 0) + k
            taus.add(j)
        rows.append(row)
        rhs.append(v)
    unknowns = ["a"] + [("tau", j) for j in sorted(taus)]
    sol, bad, free = solve(rows, rhs, unknowns)
    if bad:
        raise InconsistentFit(f"{len(bad)} table entries contradict every (a, T)")
    tau = {j: sol[("tau", j)] for j in sorted(taus) if sol[("tau", j)]}
    ordT = min(tau) if tau else INF
    series = Series.from_dict(PLUS, {j: t for j, t in tau.items() if j <= depth}, depth)
    return {"a": sol["a"], "tau": {j: t for j, t in tau.items() if j <= depth}, "T": series,
            "ord_T": ordT, "free": [u for u in free if u != "a"], "a_free": "a" in free}


# ---------------------------------------------------------------------------
# semi-casimirs

@dataclass
class SemiCasimirBasis:
    fields: dict            # free index -> {m: a_m}
    certified_order: int
    degenerate_pivots: list = field(default_factory=list)

    @property
    def dimension(self) -> int:
        ech = Echelon()
        for f in self.fields.values():
            ech.add(f)
        return ech.rank

    def to_json(self):
        return {"certified_order": self.certified_order, "dimension": self.dimension,
                "degenerate_pivots": self.degenerate_pivots,
                "fields": {str(k): [[str(m), _q(c)] for m, c in sorted(f.items())] for k, f in sorted(self.fields.items())}}


def gamma_map(j: int, table: GammaTable, order: int, lowest: Optional[int] = None):
    """``Gamma(e_j)``: ``a_j = 1``, other ``a_m`` with ``m <= 0`` zero, rows ``k > 0`` imposed."""
    if j > 0:
        raise ValueError("free indices are non-positive")
    m0 = table.m_range[0] if lowest is None else lowest
    a = {m: Fraction(0) for m in range(m0, 1)}
    a[j] = Fraction(1)
    degenerate = []
    for k in range(1, order + 1):
        rhs = sum((a[m] * table.get(k, m) for m in range(m0, k)), Fraction(0))
        piv = table.get(k, k)
        if piv == 0:
            degenerate.append(k)
            a[k] = Fraction(0)
            continue
        a[k] = -rhs / piv
    return {m: c for m, c in a.items() if c}, degenerate


def semicasimir_solve(free: Iterable[int], table: GammaTable, order: int) -> SemiCasimirBasis:
    fields, deg = {}, set()
    for j in sorted(set(free)):
        f, d = gamma_map(j, table, order)
        fields[j] = f
        deg.update(d)
    return SemiCasimirBasis(fields, order, sorted(deg))


def semicasimir_ode(a, T, sources: dict, order: int, lowest: int = -3) -> dict:
    """Solve ``(E T)' - a E'' = sum sources_p z^p`` for ``E = sum eps_j z^j``.

    ``eps_1`` is set to 0 (it is the free casimir direction); ``sources`` at
    negative powers other than ``-1`` are the independent data.
    """
    a = Fraction(a)
    tau = _tau_of(T)
    t_1 = tau.get(-1, Fraction(0))
    if sources.get(-1, 0):
        raise ValueError("the z^-1 coefficient of a derivative vanishes")
    eps = {}
    for j in range(lowest + 1, order + 2):
        p = j - 2
        if j == 1:
            eps[1] = Fraction(0)
            continue
        lower = sum((eps[i] * tau.get(p + 1 - i, 0) for i in range(lowest + 1, j)), Fraction(0))
        piv = t_1 - a * j
        if piv == 0:
            raise ZeroDivisionError(f"degenerate pivot at eps_{j}")
        eps[j] = (Fraction(sources.get(p, 0)) / (p + 1) - lower) / piv
    return eps


# ---------------------------------------------------------------------------
# commutativity sweeps

def _sweep_states(config: SugawaraConfig, X: Operator, k: int, order: Optional[int], count: int = 24):
    """States on which ``[Delta_e, X]`` is exact for a field certified up to ``order``.

    A state of z-depth ``d`` is mapped by ``X`` down to depth ``d + max(0, -k)``;
    components ``e_m`` above ``order`` could then still act, so the depth is
    capped at ``order - max(0, -k)``.
    """
    fock = config.fock
    lo, _ = safe_window([X], fock.window, fock.l)
    if order is not None:
        cap = order - max(0, -k)
        if cap < 0:
            return []
        lo = max(lo, -cap)
    return test_states(fock, lo, count=count)


def commutator_sweep(e: dict, config: SugawaraConfig, ks: Iterable[int], xs,
                     order: Optional[int] = None, count: int = 24) -> dict:
    """Check ``[Delta_e, x(A_k)] = 0`` for every ``k`` and ``x``.

    ``order`` is the index up to which ``e`` is certified; ``None`` means the
    given components are exact.
    """
    lower = min(0, *ks) if ks else 0
    e = truncate_field(e, config, margin=-lower + 1)
    D = delta_operator(e, config)
    failures, tested = [], 0
    for x in xs:
        for k in ks:
            X = _cur(matrix(x), k, config.fock)
            op = commutator(D, X)
            sts = _sweep_states(config, X, k, order, count)
            for mono in sts:
                tested += 1
                res = op.apply_monomial(mono)
                if res:
                    failures.append({"invariant": "casimir commutativity", "k": k,
                                     "x": [[_q(v) for v in r] for r in matrix(x)], "state": mono.to_json()})
                    break
    return {"ok": not failures and tested > 0, "tested": tested, "failures": failures}


def central_commutator(e: dict, config: SugawaraConfig, k: int, x, states=None):
    """Scalar value of ``[Delta_e, x(A_k)]`` (raises if not scalar)."""
    e = truncate_field(e, config, margin=max(0, -k) + 1)
    D = delta_operator(e, config)
    X = _cur(matrix(x), k, config.fock)
    if states is None:
        states = _sweep_states(config, X, k, None)
    return scalar_defect(commutator(D, X), states, config.fock)


def central_defect_check(config: SugawaraConfig, m: int, k: int, x) -> dict:
    """Compare ``[Delta_{e_m}, x(A_k)]`` with ``-(tr x / l) * gamma(e_m, A_k)``.

    ``gamma`` is measured with the identity current; a non-scalar commutator
    is reported with ``scalar = False``.
    """
    fock = config.fock
    lam = Fraction(trace(matrix(x)), fock.l)
    expected = -lam * measure_cocycle(AlgebraElement.field(m), AlgebraElement.current(identity(fock.l), k), fock)
    try:
        value = central_commutator({m: 1}, config, k, x)
    except NonScalarDefect as exc:
        return {"m": m, "k": k, "scalar": False, "ok": False, "expected": expected, "detail": str(exc)}
    return {"m": m, "k": k, "scalar": True, "value": value, "expected": expected, "ok": value == expected}


# ---------------------------------------------------------------------------
# coinvariants

@dataclass
class CoinvariantReport:
    window: int
    dimension: int
    previous_dimension: int
    stable: bool
    representatives: list
    vacuum_eigenvalue: Optional[Fraction] = None
    induced: dict = field(default_factory=dict)
    first_dead_index: Optional[int] = None
    p: Optional[int] = None

    def to_json(self):
        return {"window": self.window, "dimension": self.dimension,
                "previous_dimension": self.previous_dimension, "stable": self.stable,
                "representatives": [m.to_json() for m in self.representatives],
                "vacuum_eigenvalue": None if self.vacuum_eigenvalue is None else _q(self.vacuum_eigenvalue),
                "induced": {str(k): [[_q(c) for c in row] for row in mat] for k, mat in sorted(self.induced.items())},
                "first_dead_index": self.first_dead_index, "p": self.p}


def _regular_generators(fock: FockConfig, D: int):
    """Currents spanning the regular subalgebra on the sphere: ``gl(l) (x) A_k``, ``k < 0``."""
    l = fock.l
    mats = []
    for i in range(1, l + 1):
        for j in range(1, l + 1):
            mats.append(matrix([[1 if (r, c) == (i - 1, j - 1) else 0 for c in range(l)] for r in range(l)]))
    for k in range(-1, -D - 1, -1):
        for x in mats:
            yield k, x


def _image_span(fock: FockConfig, D: int):
    depth = D * fock.l
    states = list(monomials(fock.charge, depth))
    ech = Echelon(order=lambda m: (-m.degree, m))
    for k, x in _regular_generators(fock, D):
        op = _cur(x, k, fock)
        for mono in states:
            if mono.degree + k * fock.l + (fock.l - 1) < -depth:
                continue
            img = op.apply_monomial(mono)
            if img and all(m.degree >= -depth for m in img):
                ech.add(img)
    return states, ech


def _quotient(fock: FockConfig, D: int):
    states, ech = _image_span(fock, D)
    reps = [m for m in states if m not in ech.rows]
    return states, ech, reps


def coinvariants(config: SugawaraConfig, D: int, semibasis: Optional[SemiCasimirBasis] = None,
                 casimir: Optional[dict] = None) -> CoinvariantReport:
    """Truncated ``V / U(g_r) V`` on the degree window with a stability check."""
    if D <= 0:
        raise ValueError("coinvariants need a positive window")
    fock = config.fock.with_window(D)
    cfg = SugawaraConfig(config.algebra, fock, config.parts)
    _, _, prev = _quotient(config.fock.with_window(D - 1), D - 1)
    states, ech, reps = _quotient(fock, D)
    rep = CoinvariantReport(D, len(reps), len(prev), len(reps) == len(prev), reps)
    if casimir is None:
        casimir = {0: Fraction(1)}
    vac = Monomial.vacuum(fock.charge)
    # only the vacuum component matters on the quotient
    ev = delta_operator(truncate_field(casimir, cfg), cfg).apply_monomial(vac)
    rep.vacuum_eigenvalue = ev.get(vac, Fraction(0))
    if semibasis is not None:
        dead = []
        for j, f in sorted(semibasis.fields.items(), reverse=True):
            floor = None
            if rep.stable and all(m.degree > -fock.depth for m in reps):
                floor = -fock.depth
            mat = induced_matrix(f, cfg, ech, reps, floor)
            rep.induced[j] = mat
            dead.append((j, all(c == 0 for row in mat for c in row)))
        # deepest run of zero images reaching the bottom of the tested set
        first = None
        for j, z in dead:
            if z and first is None:
                first = j
            elif not z:
                first = None
        rep.first_dead_index = first
        if first is not None:
            rep.p = 1 - first  # genus 0: L^(p)_- = span{e_m : m <= 1 - p}
    return rep


def induced_matrix(f: dict, config: SugawaraConfig, ech: Echelon, reps: list,
                   floor: Optional[int] = None) -> list:
    """Matrix of the induced operator on the quotient spanned by ``reps``.

    The image span is graded, so when the quotient is stable and has no
    representatives at the bottom degree, terms below ``floor`` carry no
    coinvariants and are dropped.  Without ``floor`` they raise.
    """
    D = delta_operator(truncate_field(f, config), config)
    idx = {m: i for i, m in enumerate(reps)}
    mat = [[Fraction(0)] * len(reps) for _ in reps]
    for col, mono in enumerate(reps):
        img = D.apply_monomial(mono)
        if floor is not None:
            img = {m: c for m, c in img.items() if m.degree >= floor}
        red = ech.reduce(img)
        for m, c in red.items():
            if m not in idx:
                raise WindowUnstable(f"image leaves the window at {m!r}")
            mat[idx[m]][col] = c
    return mat


def induced_rank(semibasis: SemiCasimirBasis, report: CoinvariantReport) -> int:
    """Rank of the span of the induced operators ``Delta(Gamma(e_k))`` on the quotient."""
    ech = Echelon()
    for j in semibasis.fields:
        mat = report.induced.get(j)
        if mat is None:
            continue
        flat = {(r, c): v for r, row in enumerate(mat) for c, v in enumerate(row) if v}
        ech.add(flat)
    return ech.rank
