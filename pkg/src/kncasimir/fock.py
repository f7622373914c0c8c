"""Semi-infinite wedge spaces of fixed charge on the sphere (rank-1 bundle,
``l`` components), with regularized one-body operators and brute-force
measurement of representation cocycles.

Basis vectors ``psi_N`` are numbered by ``N = n*l + i`` (``1 <= i <= l``) and
stand for ``z**n`` times the ``i``-th unit vector.  A monomial of charge ``M``
occupies ``M, M+1, ...`` except for finitely many changes; it is stored as the
pair (particles below ``M``, holes at or above ``M``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence

from .surface import Genus0Surface
from .pairing import structure_constants

SPHERE = Genus0Surface()


class WindowError(ValueError):
    pass


class NonScalarDefect(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# configuration and numbering

@dataclass(frozen=True)
class FockConfig:
    l: int = 1
    charge: int = 0
    twist: tuple = ()
    window: int = 12

    def __post_init__(self):
        if self.l < 1:
            raise ValueError("l must be positive")
        if self.window < 0:
            raise ValueError("window must be non-negative")
        twist = self.twist
        if not isinstance(twist, (tuple, list)):
            twist = (twist,) * self.l
        tw = tuple(Fraction(t) for t in twist) or (Fraction(0),) * self.l
        if len(tw) != self.l:
            raise ValueError(f"twist needs {self.l} entries")
        object.__setattr__(self, "twist", tw)

    def genericity(self) -> dict:
        """Report the genericity hypothesis for casimir experiments."""
        M = self.charge
        s = sum((self.twist[index_decode(N, self.l)[2] - 1] for N in range(M, 0)), Fraction(0))
        ok = M < 0 and s.denominator != 1
        return {"charge_negative": M < 0, "twist_sum": s, "generic": ok}

    @property
    def anchor(self) -> int:
        """Regularization reference: every component filled from ``z**-1`` on."""
        return 1 - self.l

    @property
    def depth(self) -> int:
        """The window in monomial-degree units (``window`` counts powers of z)."""
        return self.window * self.l

    def with_window(self, D: int) -> "FockConfig":
        return FockConfig(self.l, self.charge, self.twist, D)


def index_encode(n: int, j: int, i: int, l: int) -> int:
    if j != 0:
        raise ValueError("only rank 1 (j = 0) is supported")
    if not 1 <= i <= l:
        raise ValueError(f"component {i} outside 1..{l}")
    return n * l + i


def index_decode(N: int, l: int):
    n = (N - 1) // l
    return n, 0, N - n * l


# ---------------------------------------------------------------------------
# monomials and vectors

@dataclass(frozen=True, order=True)
class Monomial:
    charge: int
    particles: tuple = ()
    holes: tuple = ()

    def __post_init__(self):
        if len(self.particles) != len(self.holes):
            raise ValueError("particle and hole counts differ")

    @classmethod
    def vacuum(cls, charge: int):
        return cls(charge, (), ())

    @classmethod
    def from_occupied_prefix(cls, charge: int, prefix: Sequence[int]):
        prefix = list(prefix)
        if any(b <= a for a, b in zip(prefix, prefix[1:])):
            raise ValueError("occupied indices must increase")
        tail = charge + len(prefix)
        if prefix and prefix[-1] >= tail:
            raise ValueError("prefix does not join the vacuum tail")
        occ = set(prefix)
        particles = tuple(N for N in prefix if N < charge)
        holes = tuple(N for N in range(charge, tail) if N not in occ)
        return cls(charge, particles, holes)

    @classmethod
    def from_partition(cls, charge: int, parts: Sequence[int]):
        return cls.from_occupied_prefix(charge, [charge + k - p for k, p in enumerate(parts)])

    def occupied(self, N: int) -> bool:
        if N < self.charge:
            return N in self.particles
        return N not in self.holes

    @property
    def degree(self) -> int:
        return sum(self.particles) - sum(self.holes)

    @property
    def tail_start(self) -> int:
        """Smallest ``T`` with every index ``>= T`` occupied."""
        return max(self.holes) + 1 if self.holes else self.charge

    def max_unoccupied(self) -> int:
        if self.holes:
            return self.holes[-1]
        # largest index below the charge not holding a particle
        N = self.charge - 1
        ps = set(self.particles)
        while N in ps:
            N -= 1
        return N

    def occupied_prefix(self) -> list:
        start = self.particles[0] if self.particles else self.charge
        return [N for N in range(min(start, self.charge), self.tail_start) if self.occupied(N)]

    def count_between(self, a: int, b: int) -> int:
        """Occupied indices strictly between ``a`` and ``b``."""
        lo, hi = min(a, b), max(a, b)
        cnt = sum(1 for p in self.particles if lo < p < hi)
        # the stretch at or above the charge
        s, e = max(lo + 1, self.charge), hi - 1
        if e >= s:
            cnt += (e - s + 1) - sum(1 for h in self.holes if s <= h <= e)
        return cnt

    def move(self, J: int, I: int) -> "Monomial":
        """Occupied ``J`` replaced by unoccupied ``I`` (no sign)."""
        ps, hs = set(self.particles), set(self.holes)
        if J < self.charge:
            ps.discard(J)
        else:
            hs.add(J)
        if I < self.charge:
            ps.add(I)
        else:
            hs.discard(I)
        return Monomial(self.charge, tuple(sorted(ps)), tuple(sorted(hs)))

    def to_json(self) -> dict:
        return {"charge": self.charge, "occupied_prefix": self.occupied_prefix()}

    @classmethod
    def from_json(cls, d: dict):
        return cls.from_occupied_prefix(int(d["charge"]), [int(x) for x in d["occupied_prefix"]])

    def __repr__(self):
        pre = self.occupied_prefix()
        return f"|{','.join(map(str, pre))};{self.tail_start}..>"


def partitions(n: int, max_part: Optional[int] = None):
    """Partitions of ``n`` as non-increasing tuples."""
    if max_part is None:
        max_part = n
    if n == 0:
        yield ()
        return
    for p in range(min(n, max_part), 0, -1):
        for rest in partitions(n - p, p):
            yield (p,) + rest


def monomials(charge: int, depth: int):
    """All monomials of the given charge with degree in ``[-depth, 0]``."""
    for d in range(depth + 1):
        for lam in partitions(d):
            yield Monomial.from_partition(charge, lam)


class FockVector:
    """Sparse combination of monomials of one charge.

    ``leaked`` records that some term lies below the degree window it was
    produced for.
    """

    __slots__ = ("terms", "charge", "window", "leaked")

    def __init__(self, terms: Optional[dict] = None, charge: int = 0, window: Optional[int] = None, leaked: bool = False):
        terms = {m: c for m, c in (terms or {}).items() if c != 0}
        for m in terms:
            if m.charge != charge:
                raise ValueError("mixed charges in a FockVector")
        self.terms = terms
        self.charge = charge
        self.window = window
        self.leaked = leaked or (window is not None and any(m.degree < -window for m in terms))

    @classmethod
    def basis(cls, mono: Monomial, window: Optional[int] = None):
        return cls({mono: Fraction(1)}, mono.charge, window)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "FockVector"):
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return FockVector(out, self.charge, self.window, self.leaked or other.leaked)

    def __sub__(self, other: "FockVector"):
        return self + other.scale(-1)

    def scale(self, s):
        return FockVector({m: s * c for m, c in self.terms.items()}, self.charge, self.window, self.leaked)

    def __eq__(self, other):
        return isinstance(other, FockVector) and self.terms == other.terms

    def __repr__(self):
        return " + ".join(f"({c}){m!r}" for m, c in sorted(self.terms.items())) or "0"

    def to_json(self):
        return [{"monomial": m.to_json(), "coef": _q(c)} for m, c in sorted(self.terms.items())]


def _q(c) -> str:
    c = Fraction(c)
    return f"{c.numerator}/{c.denominator}"


def vacuum(config: FockConfig) -> FockVector:
    return FockVector.basis(Monomial.vacuum(config.charge), config.depth)


# ---------------------------------------------------------------------------
# operators

class Operator:
    """Linear operator on fixed-charge wedge spaces.

    ``lower``/``upper`` bound how far one application can move the degree
    (down / up); intermediate steps of composite operators are included.
    """

    lower: int = 0
    upper: int = 0
    name: str = "op"

    def apply_monomial(self, mono: Monomial) -> dict:
        raise NotImplementedError

    def apply(self, v: FockVector) -> FockVector:
        out = {}
        for mono, c in v.terms.items():
            for m2, c2 in self.apply_monomial(mono).items():
                out[m2] = out.get(m2, 0) + c * c2
        return FockVector(out, v.charge, v.window, v.leaked)

    __call__ = apply

    def __add__(self, other):
        return LinComb([(Fraction(1), self), (Fraction(1), other)])

    def __sub__(self, other):
        return LinComb([(Fraction(1), self), (Fraction(-1), other)])

    def __mul__(self, other):
        if isinstance(other, Operator):
            return Product([self, other])
        return LinComb([(Fraction(other), self)])

    def __rmul__(self, s):
        return LinComb([(Fraction(s), self)])

    def __neg__(self):
        return LinComb([(Fraction(-1), self)])


def commutator(a: Operator, b: Operator) -> Operator:
    return Product([a, b]) - Product([b, a])


class OneBody(Operator):
    """Regularized lift of a one-particle operator given by its columns.

    ``column(N)`` returns ``{I: X_IJ}`` for ``J = N``; every ``I - N`` lies
    in ``[lo, hi]``.  Diagonal entries act by ``occupancy(N) - [N >= anchor]``.
    """

    def __init__(self, column: Callable[[int], dict], lo: int, hi: int, name: str = "one-body",
                 scalar=0, anchor: int = 0):
        self._column = lru_cache(maxsize=None)(column)
        self.lo, self.hi = lo, hi
        self.lower = max(0, -lo)
        self.upper = max(0, hi)
        self.name = name
        self.scalar = Fraction(scalar)
        self.anchor = anchor
        self._memo = {}

    def column(self, N: int) -> dict:
        return self._column(N)

    def apply_monomial(self, mono: Monomial) -> dict:
        hit = self._memo.get(mono)
        if hit is not None:
            return hit
        out = {}
        M = mono.charge
        # regularized diagonal
        diag = self.scalar
        a = self.anchor
        lo_r = min(a, M, mono.particles[0] if mono.particles else M)
        hi_r = max(a, M, mono.holes[-1] + 1 if mono.holes else M)
        for J in range(lo_r, hi_r):
            reg = (1 if mono.occupied(J) else 0) - (1 if J >= a else 0)
            if reg:
                x = self.column(J).get(J, 0)
                if x:
                    diag += reg * x
        if diag:
            out[mono] = diag
        # off-diagonal moves J -> I
        if self.lo < 0 or self.hi > 0:
            start = mono.particles[0] if mono.particles else M
            stop = mono.max_unoccupied() - self.lo
            for J in range(min(start, M), stop + 1):
                if not mono.occupied(J):
                    continue
                for I, x in self.column(J).items():
                    if I == J or not x or mono.occupied(I):
                        continue
                    sign = -1 if mono.count_between(I, J) % 2 else 1
                    m2 = mono.move(J, I)
                    out[m2] = out.get(m2, 0) + sign * x
        out = {m: c for m, c in out.items() if c != 0}
        self._memo[mono] = out
        return out

    def columns_json(self, N_range: Iterable[int]) -> dict:
        cols = []
        for N in N_range:
            col = self.column(N)
            cols.append({"N": N, "entries": [{"row": I, "value": _q(v)} for I, v in sorted(col.items()) if v]})
        return {"name": self.name, "band": [self.lo, self.hi], "scalar": _q(self.scalar), "columns": cols}


class LinComb(Operator):
    def __init__(self, terms):
        flat = []
        for c, op in terms:
            if isinstance(op, LinComb):
                flat.extend((c * c2, o2) for c2, o2 in op.terms)
            else:
                flat.append((Fraction(c), op))
        self.terms = [(c, op) for c, op in flat if c != 0]
        self.lower = max((op.lower for _, op in self.terms), default=0)
        self.upper = max((op.upper for _, op in self.terms), default=0)
        self.name = "lincomb"

    def apply_monomial(self, mono):
        out = {}
        for c, op in self.terms:
            for m2, c2 in op.apply_monomial(mono).items():
                out[m2] = out.get(m2, 0) + c * c2
        return {m: c for m, c in out.items() if c != 0}


class Product(Operator):
    """``ops[0] ops[1] ... ops[-1]`` (rightmost acts first)."""

    def __init__(self, ops):
        self.ops = list(ops)
        # worst cumulative excursion below / above the start degree
        low = high = cur_lo = cur_hi = 0
        for op in reversed(self.ops):
            cur_lo -= op.lower
            cur_hi += op.upper
            low, high = min(low, cur_lo), max(high, cur_hi)
        self.lower, self.upper = -low, high
        self.name = "product"

    def apply_monomial(self, mono):
        cur = {mono: Fraction(1)}
        for op in reversed(self.ops):
            nxt = {}
            for m, c in cur.items():
                for m2, c2 in op.apply_monomial(m).items():
                    nxt[m2] = nxt.get(m2, 0) + c * c2
            cur = {m: c for m, c in nxt.items() if c != 0}
            if not cur:
                break
        return cur


class Scalar(Operator):
    def __init__(self, c):
        self.c = Fraction(c)
        self.name = "scalar"

    def apply_monomial(self, mono):
        return {mono: self.c} if self.c else {}


ZERO = Scalar(0)


def matrix(rows) -> tuple:
    return tuple(tuple(Fraction(x) for x in r) for r in rows)


def identity(l: int) -> tuple:
    return matrix([[1 if i == j else 0 for j in range(l)] for i in range(l)])


def unit(l: int, a: int, b: int) -> tuple:
    """Elementary matrix with a single 1 at row ``a``, column ``b`` (1-based)."""
    return matrix([[1 if (i, j) == (a - 1, b - 1) else 0 for j in range(l)] for i in range(l)])


def mat_mul(x, y):
    n = len(x)
    return matrix([[sum(x[i][k] * y[k][j] for k in range(n)) for j in range(n)] for i in range(n)])


def mat_add(x, y, s=1):
    return matrix([[a + s * b for a, b in zip(r1, r2)] for r1, r2 in zip(x, y)])


def mat_scale(x, s):
    return matrix([[s * a for a in r] for r in x])


def mat_bracket(x, y):
    return mat_add(mat_mul(x, y), mat_mul(y, x), -1)


def trace(x):
    return sum(x[i][i] for i in range(len(x)))


def is_zero_matrix(x) -> bool:
    return all(a == 0 for r in x for a in r)


def current_operator(x, m: int, config: FockConfig) -> OneBody:
    """``x (x) A_m`` acting on columns: ``psi_{n,i} -> sum_{i'} x[i'][i] (A_m A_n)_{n'} psi_{n',i'}``."""
    l = config.l
    x = matrix(x)

    def column(N):
        n, _, i = index_decode(N, l)
        out = {}
        for k, c in structure_constants(SPHERE, "AA", m, n).items():
            for ip in range(1, l + 1):
                v = x[ip - 1][i - 1]
                if v:
                    I = index_encode(k, 0, ip, l)
                    out[I] = out.get(I, 0) + c * v
        return out

    return OneBody(column, m * l - (l - 1), m * l + (l - 1), name=f"x(A_{m})", anchor=config.anchor)


def vectorfield_operator(m: int, config: FockConfig) -> OneBody:
    """``e_m`` acting as ``E (d/dz + twist/z)`` on each component."""
    l = config.l

    def column(N):
        n, _, i = index_decode(N, l)
        out = {}
        for k, c in structure_constants(SPHERE, "LA", m, n).items():
            I = index_encode(k, 0, i, l)
            out[I] = out.get(I, 0) + c
        lam = config.twist[i - 1]
        if lam:
            # E/z = z**m
            for k, c in structure_constants(SPHERE, "AA", m, n).items():
                I = index_encode(k, 0, i, l)
                out[I] = out.get(I, 0) + lam * c
        return {I: v for I, v in out.items() if v}

    return OneBody(column, m * l, m * l, name=f"e_{m}", anchor=config.anchor)


def wedge_apply(I: int, J: int, v: FockVector, l: int = 1) -> FockVector:
    """Regularized action of the elementary matrix ``E_IJ``."""
    op = OneBody(lambda N: {I: Fraction(1)} if N == J else {}, I - J, I - J,
                 name=f"E_{I},{J}", anchor=1 - l)
    return op.apply(v)


# ---------------------------------------------------------------------------
# algebra elements of D1 (genus 0) and their operators

@dataclass(frozen=True)
class AlgebraElement:
    """``sum_m c_m e_m + sum (x, m, c) c x A_m``."""

    fields: tuple = ()     # ((m, coef), ...)
    currents: tuple = ()   # ((x, m, coef), ...)

    @classmethod
    def field(cls, m: int, c=1):
        return cls(((m, Fraction(c)),), ())

    @classmethod
    def current(cls, x, m: int, c=1):
        return cls((), ((matrix(x), m, Fraction(c)),))

    def __add__(self, other):
        return AlgebraElement(self.fields + other.fields, self.currents + other.currents)

    def scale(self, s):
        s = Fraction(s)
        return AlgebraElement(tuple((m, c * s) for m, c in self.fields),
                              tuple((x, m, c * s) for x, m, c in self.currents))

    def is_zero(self):
        return not any(c for _, c in self.fields) and not any(
            c and not is_zero_matrix(x) for x, _, c in self.currents)


def bracket(u: AlgebraElement, v: AlgebraElement) -> AlgebraElement:
    fields, currents = [], []
    for m, a in u.fields:
        for n, b in v.fields:
            for k, c in structure_constants(SPHERE, "LL", m, n).items():
                fields.append((k, a * b * c))
        for x, n, b in v.currents:
            for k, c in structure_constants(SPHERE, "LA", m, n).items():
                currents.append((x, k, a * b * c))
    for x, m, a in u.currents:
        for n, b in v.fields:
            for k, c in structure_constants(SPHERE, "LA", n, m).items():
                currents.append((x, k, -a * b * c))
        for y, n, b in v.currents:
            xy = mat_bracket(x, y)
            if is_zero_matrix(xy):
                continue
            for k, c in structure_constants(SPHERE, "AA", m, n).items():
                currents.append((xy, k, a * b * c))
    return AlgebraElement(tuple(fields), tuple(currents))


def element_operator(u: AlgebraElement, config: FockConfig) -> Operator:
    terms = []
    for m, c in u.fields:
        if c:
            terms.append((c, _vf(m, config)))
    for x, m, c in u.currents:
        if c and not is_zero_matrix(x):
            terms.append((c, _cur(x, m, config)))
    return LinComb(terms)


@lru_cache(maxsize=None)
def _vf(m, config):
    return vectorfield_operator(m, config)


@lru_cache(maxsize=None)
def _cur(x, m, config):
    return current_operator(x, m, config)


def safe_window(ops, D: int, l: int = 1):
    """Degree range ``[-(D - sum of lowering bands), 0]``.

    ``ops`` holds operators or integer bands; operator bands are converted
    from monomial-degree units to powers of z by dividing by ``l``.
    """
    total = Fraction(0)
    for op in ops:
        total += op if isinstance(op, int) else Fraction(op.lower, l)
    if total > D:
        raise WindowError(f"bands {total} exceed the window {D}")
    lo = -(D - total)
    return (int(lo) if lo.denominator == 1 else lo), 0


def test_states(config: FockConfig, lo: int, count: int = 12) -> list:
    """Monomials with degree in ``[lo * l, 0]``, spread across degrees."""
    depth = math.floor(-lo * config.l)
    by_degree = [list(monomials_of_degree(config.charge, d)) for d in range(depth + 1)]
    out = []
    rnd = 0
    while len(out) < count and any(by_degree):
        for bucket in by_degree:
            if rnd < len(bucket):
                out.append(bucket[rnd])
                if len(out) >= count:
                    break
        rnd += 1
        if rnd > max(len(b) for b in by_degree):
            break
    return out


def monomials_of_degree(charge: int, d: int):
    for lam in partitions(d):
        yield Monomial.from_partition(charge, lam)


def scalar_defect(op: Operator, states, config: FockConfig, min_states: int = 3):
    """The scalar ``s`` with ``op |v> = s |v>`` on every given state.

    Raises :class:`NonScalarDefect` when no such scalar exists.
    """
    if len(states) < min_states:
        raise WindowError(f"need at least {min_states} states, got {len(states)}")
    value = None
    for mono in states:
        res = op.apply_monomial(mono)
        c = res.get(mono, Fraction(0))
        if any(m != mono for m in res):
            raise NonScalarDefect(f"off-diagonal defect on {mono!r}")
        if value is None:
            value = c
        elif c != value:
            raise NonScalarDefect(f"defect {c} on {mono!r} differs from {value}")
    return value


def measure_cocycle(u: AlgebraElement, v: AlgebraElement, config: FockConfig, states=None):
    """Central value of ``[u^, v^] - [u, v]^`` in the residue orientation.

    The returned value is the negative of the operator defect, which makes
    the pairing of ``A_1`` and ``A_{-1}`` equal to ``res(A_1 dA_{-1}) = -1``.
    """
    U, V = element_operator(u, config), element_operator(v, config)
    W = element_operator(bracket(u, v), config)
    defect = commutator(U, V) - W
    if states is None:
        lo, _ = safe_window([U, V], config.window, config.l)
        states = test_states(config, lo)
    return -scalar_defect(defect, states, config)


def a_infinity_cocycle(X: Callable[[int], dict], Y: Callable[[int], dict], span: Iterable[int], anchor: int = 0):
    """Trace formula ``sum X_ij Y_ji ([i >= a] - [j >= a])`` over a finite index span."""
    tot = Fraction(0)
    span = list(span)
    for j in span:
        for i, xij in X(j).items():
            yji = Y(i).get(j, 0)
            if yji:
                tot += xij * yji * ((1 if i >= anchor else 0) - (1 if j >= anchor else 0))
    return tot
