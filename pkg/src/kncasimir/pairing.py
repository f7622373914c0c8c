"""Residue pairings, local cocycles and almost-graded structure constants."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .jets import (EXACT, INF, MINUS, PLUS, KNTensor, Series, TruncationError,
                   chart_transfer, differential, lie_derivative, residue,
                   residue_series)

FAMILIES = ("AA", "LL", "LA", "Lomega")


class BandViolation(RuntimeError):
    pass


class WindowError(ValueError):
    pass


@dataclass(frozen=True)
class Connection:
    """A connection-type coefficient given in both charts.

    ``plus`` is in the coordinate at ``P+``; ``minus`` (optional) in the
    coordinate at ``P-``.  Evaluating a cocycle at ``P-`` needs ``minus``.
    """

    plus: Series
    minus: Optional[Series] = None

    def chart(self, at: str) -> Series:
        s = self.plus if at == PLUS else self.minus
        if s is None:
            raise ValueError(f"connection not given at {at}")
        return s

    @classmethod
    def zero(cls, surface):
        z = surface.zero(0)
        return cls(z.plus, z.minus)


def affine_connection_genus0(plus: Series, a) -> Connection:
    """Complete an exact ``T`` at ``P+`` of the sphere to both charts.

    Under ``u = 1/z`` the coefficient transforms as
    ``T(u) = -u**-2 T(1/u) + 2a/u``.
    """
    a = Fraction(a)
    minus = chart_transfer(plus, 1) + Series.monomial(MINUS, -1, 2 * a)
    return Connection(plus, minus)


def projective_connection_genus0(plus: Series) -> Connection:
    """Complete an exact ``R`` at ``P+`` of the sphere; the Schwarzian of a
    Moebius chart change vanishes, so ``R`` transforms as a quadratic differential."""
    return Connection(plus, chart_transfer(plus, 2))


def T_from_vectorfield(v: KNTensor, a, order: Optional[int] = None) -> Connection:
    """``T = a v'/v`` in both charts for a vector field ``v``.

    Exact polynomial ``v`` with more than one term has an infinite logarithmic
    derivative; pass ``order`` to truncate it.
    """
    if v.weight != -1:
        raise ValueError("T_from_vectorfield needs a vector field")
    if v.plus.is_zero or v.minus.is_zero:
        raise ValueError("vector field vanishes identically")

    def logder(s: Series) -> Series:
        if s.order == INF and len(s.coeffs) > 1:
            if order is None:
                raise TruncationError("logarithmic derivative is an infinite series; pass order")
            s = s.truncate(order + s.val + 1)
        return (s.derivative() * s.inverse()).scale(a)

    return Connection(logder(v.plus), logder(v.minus))


@dataclass(frozen=True)
class CocycleParams:
    a1: object = Fraction(-1, 2)
    a2: object = Fraction(1)
    a3: object = Fraction(1)
    R: Optional[Connection] = None
    T: Optional[Connection] = None


def _d(s: Series, n: int) -> Series:
    for _ in range(n):
        s = s.derivative()
    return s


def _as_series(c, at: str, like: Series) -> Optional[Series]:
    if c is None:
        return None
    if isinstance(c, Series):
        if c.chart != at:
            raise ValueError(f"series given at {c.chart}, needed at {at}")
        return c
    return c.chart(at)


def affine_cocycle(A: KNTensor, B: KNTensor, at: str = PLUS):
    """``res(A dB)``; multiply by the trace form for matrix-valued arguments."""
    return residue(A * differential(B), at)


def vector_cocycle(e: KNTensor, f: KNTensor, R=None, at: str = PLUS):
    E, F = e.chart(at), f.chart(at)
    s = (_d(E, 3) * F - E * _d(F, 3)).scale(Fraction(1, 2) if E.mode == EXACT else E.ctx.mpf(0.5))
    Rs = _as_series(R, at, E)
    if Rs is not None:
        s = s - Rs * (E.derivative() * F - E * F.derivative())
    return residue_series(s)


def mixed_cocycle(e: KNTensor, A: KNTensor, a, T=None, at: str = PLUS):
    """``res(a f A'' + T f A')`` for ``e = f d/dz``."""
    E, F = e.chart(at), A.chart(at)
    s = (E * _d(F, 2)).scale(a)
    Ts = _as_series(T, at, E)
    if Ts is not None:
        s = s + Ts * E * F.derivative()
    return residue_series(s)


@dataclass(frozen=True)
class D1Element:
    """An element ``f d/dz + g`` of the differential-operator algebra."""

    vec: Optional[KNTensor] = None
    fun: Optional[KNTensor] = None

    def bracket(self, other: "D1Element") -> "D1Element":
        vec = None
        if self.vec is not None and other.vec is not None:
            vec = lie_derivative(self.vec, other.vec)
        fun = None
        if self.vec is not None and other.fun is not None:
            fun = lie_derivative(self.vec, other.fun)
        if other.vec is not None and self.fun is not None:
            t = lie_derivative(other.vec, self.fun)
            fun = -t if fun is None else fun - t
        return D1Element(vec, fun)


def local_cocycle(d1: D1Element, d2: D1Element, params: CocycleParams, at: str = PLUS):
    """Residue of the general local cocycle integrand on ``D1`` elements."""
    total = None

    def add(x):
        nonlocal total
        total = x if total is None else total + x

    f1 = d1.vec.chart(at) if d1.vec is not None else None
    f2 = d2.vec.chart(at) if d2.vec is not None else None
    g1 = d1.fun.chart(at) if d1.fun is not None else None
    g2 = d2.fun.chart(at) if d2.fun is not None else None
    if f1 is not None and f2 is not None:
        add((f1 * _d(f2, 3) - _d(f1, 3) * f2).scale(params.a1))
        Rs = _as_series(params.R, at, f1)
        if Rs is not None:
            add(Rs * (f1 * f2.derivative() - f1.derivative() * f2))
    Ts = _as_series(params.T, at, f1 or f2) if params.T is not None else None
    if f1 is not None and g2 is not None:
        add((f1 * _d(g2, 2)).scale(params.a2))
        if Ts is not None:
            add(Ts * f1 * g2.derivative())
    if f2 is not None and g1 is not None:
        add(-(f2 * _d(g1, 2)).scale(params.a2))
        if Ts is not None:
            add(-(Ts * f2 * g1.derivative()))
    if g1 is not None and g2 is not None:
        add((g1 * g2.derivative()).scale(params.a3))
    if total is None:
        return _zero_of(d1, d2)
    return residue_series(total)


def _zero_of(d1, d2):
    for t in (d1.vec, d1.fun, d2.vec, d2.fun):
        if t is not None and t.mode != EXACT:
            return t.plus.ctx.mpf(0)
    return Fraction(0)


def pair_vector_quadratic(e: KNTensor, Om: KNTensor, at: str = PLUS):
    if e.weight != -1 or Om.weight != 2:
        raise ValueError("pairing needs a vector field and a quadratic differential")
    return residue(e * Om, at)


def quadratic_differential_check(a, T: Connection, A: KNTensor) -> bool:
    """Check at genus 0 that ``a A'' + T A'`` transforms as a quadratic differential."""
    q = {}
    for at in (PLUS, MINUS):
        F = A.chart(at)
        q[at] = _d(F, 2).scale(a) + T.chart(at) * F.derivative()
    return chart_transfer(q[PLUS], 2).equals(q[MINUS])


# ---------------------------------------------------------------------------
# structure constants

_FAMILY_WEIGHT = {"function": 0, "vector": -1, "oneform": 1, "quadratic": 2}


def _orders(S, family, k):
    return S.expected_orders(family, k)


def index_range(S, family: str, ord_plus: int, ord_minus: int, search: int = 12):
    """Basis indices of ``family`` whose elements respect the given orders.

    A tensor with ``ord_{P+} >= ord_plus`` and ``ord_{P-} >= ord_minus``
    expands over exactly these elements.
    """
    ks = []
    # P+ order is strictly monotone in the index; scan a generous range
    lo = -abs(ord_plus) - abs(ord_minus) - search
    hi = abs(ord_plus) + abs(ord_minus) + search
    for k in range(lo, hi + 1):
        op, om = _orders(S, family, k)
        if op >= ord_plus and om >= ord_minus:
            ks.append(k)
    if not ks:
        return None
    return min(ks), max(ks)


def _product_orders(S, fam1, m, fam2, n, derivative=False):
    p1, q1 = _orders(S, fam1, m)
    p2, q2 = _orders(S, fam2, n)
    shift = 1 if derivative else 0
    return p1 + p2 - shift, q1 + q2 - shift


def band_for(S, family: str, m: int, n: int):
    """Certified index range ``(lo, hi)`` of the output run for ``(m, n)``."""
    if family == "AA":
        op, om = _product_orders(S, "function", m, "function", n)
        return index_range(S, "function", op, om)
    if family == "LL":
        op, om = _product_orders(S, "vector", m, "vector", n, derivative=True)
        # the bracket of fields is at least as regular as their product order minus one
        return index_range(S, "vector", op, om)
    if family == "LA":
        op, om = _product_orders(S, "vector", m, "function", n, derivative=True)
        return index_range(S, "function", op, om)
    if family == "Lomega":
        op, om = _product_orders(S, "vector", m, "oneform", n, derivative=True)
        return index_range(S, "oneform", op, om)
    raise ValueError(f"unknown family {family!r}")


def _product(S, family, m, n) -> KNTensor:
    if family == "AA":
        return S.function(m) * S.function(n)
    if family == "LL":
        return lie_derivative(S.vector(m), S.vector(n))
    if family == "LA":
        return lie_derivative(S.vector(m), S.function(n))
    if family == "Lomega":
        return lie_derivative(S.vector(m), S.oneform(n))
    raise ValueError(f"unknown family {family!r}")


def _coefficient(S, family, X: KNTensor, k: int):
    if family in ("AA", "LA"):
        return residue(X * S.oneform(k))
    if family == "LL":
        return residue(X * S.quadratic(k))
    return residue(X * S.function(k))


def _is_zero(S, c) -> bool:
    if S.tol == 0:
        return c == 0
    return abs(c) <= S.tol


def structure_constants(S, family: str, m: int, n: int, margin: int = 2) -> dict:
    """Expansion coefficients of the product/bracket/action of basis elements.

    Coefficients are extracted by duality residues over the certified band
    plus ``margin`` indices on each side; a nonzero value outside the band
    raises :class:`BandViolation`.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    band = band_for(S, family, m, n)
    X = _product(S, family, m, n)
    if X.is_zero():
        return {}
    if band is None:
        raise BandViolation(f"no admissible indices for {family}({m},{n})")
    lo, hi = band
    run = {}
    for k in range(lo - margin, hi + margin + 1):
        c = _coefficient(S, family, X, k)
        if _is_zero(S, c):
            continue
        if not lo <= k <= hi:
            raise BandViolation(f"{family}({m},{n}) has coefficient at k={k} outside [{lo},{hi}]")
        run[k] = c
    return run


@dataclass
class StructureTable:
    family: str
    runs: dict = field(default_factory=dict)
    bands: dict = field(default_factory=dict)

    @classmethod
    def build(cls, S, family: str, window: int):
        t = cls(family)
        for m in range(-window, window + 1):
            for n in range(-window, window + 1):
                t.runs[(m, n)] = structure_constants(S, family, m, n)
                t.bands[(m, n)] = band_for(S, family, m, n)
        return t

    def base(self, m, n):
        return n - m if self.family == "Lomega" else m + n

    def width_stats(self):
        """Largest observed offsets ``k - base`` over stored runs."""
        lo = hi = 0
        for (m, n), run in self.runs.items():
            for k in run:
                d = k - self.base(m, n)
                lo, hi = min(lo, d), max(hi, d)
        return lo, hi

    def entries(self):
        for (m, n), run in sorted(self.runs.items()):
            for k, v in sorted(run.items()):
                yield m, n, k, v


def locality_band(table: dict, window: Optional[int] = None, tol=0) -> int:
    """Smallest ``L`` with every nonzero entry at ``|i + j| <= L``.

    ``table`` maps ``(i, j)`` to values over a square window of half-width
    ``window`` (inferred when omitted).  A band wider than the window cannot
    be certified and raises :class:`WindowError`.
    """
    if window is None:
        window = max((max(abs(i), abs(j)) for i, j in table), default=0)
    L = 0
    for (i, j), v in table.items():
        nz = (v != 0) if tol == 0 else abs(v) > tol
        if nz:
            L = max(L, abs(i + j))
    if L > window:
        raise WindowError(f"locality band {L} exceeds the window {window}")
    return L


def cocycle_table(kind: str, S, window: int, params: Optional[CocycleParams] = None, a=1, T=None, R=None) -> dict:
    out = {}
    rng = range(-window, window + 1)
    for i in rng:
        for j in rng:
            if kind == "affine":
                v = affine_cocycle(S.function(i), S.function(j))
            elif kind == "vector":
                v = vector_cocycle(S.vector(i), S.vector(j), R)
            elif kind == "mixed":
                v = mixed_cocycle(S.vector(j), S.function(i), S.scalar(a), T)
            else:
                raise ValueError(f"unknown cocycle kind {kind!r}")
            out[(i, j)] = v
    return out


# ---------------------------------------------------------------------------
# JSON

def scalar_to_json(v) -> dict:
    if isinstance(v, (int, Fraction)):
        v = Fraction(v)
        return {"value_num": str(v.numerator), "value_den": str(v.denominator)}
    import mpmath
    re_, im_ = mpmath.re(v), mpmath.im(v)
    return {"value_num": mpmath.nstr(re_, 30), "value_den": "1", "value_im": mpmath.nstr(im_, 30)}


def table_to_json(family: str, entries) -> dict:
    rows = []
    for e in entries:
        m, n, k, v = e
        row = {"m": m, "n": n, "k": k}
        row.update(scalar_to_json(v))
        rows.append(row)
    return {"family": family, "entries": rows}


def cocycle_table_to_json(family: str, table: dict) -> dict:
    return table_to_json(family, ((i, j, None, v) for (i, j), v in sorted(table.items())))


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True)
