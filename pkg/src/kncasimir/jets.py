"""Truncated Laurent expansions and weighted tensors in the two marked-point charts.

A :class:`Series` is a Laurent expansion ``sum_{e=val}^{order} c_e z^e`` whose
coefficients are known exactly up to the guaranteed order ``order``; anything
above ``order`` is unknown (not zero).  ``order = INF`` means the expansion is a
finite Laurent polynomial known completely, which is the situation for every
genus-0 basis element.

Scalars come in two arithmetic modes:

* ``"exact"``: :class:`fractions.Fraction`, zero tolerance;
* ``"float"``: mpmath numbers bound to a private precision context, compared
  with tolerance ``2**(-prec/2)``.

A :class:`KNTensor` bundles the expansions of one tensor of weight
``w`` (0 function, -1 vector field, 1 one-form, 2 quadratic differential) at
``P+`` and ``P-``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Optional

INF = math.inf

PLUS = "P+"
MINUS = "P-"

EXACT = "exact"
FLOAT = "float"


class ChartMismatch(ValueError):
    pass


class ModeMismatch(ValueError):
    pass


class TruncationError(ValueError):
    """A requested coefficient lies above the guaranteed order."""


def _zero_like(mode: str, ctx=None):
    if mode == EXACT:
        return Fraction(0)
    return ctx.mpf(0)


def is_zero(x, tol=0) -> bool:
    if isinstance(x, (int, Fraction)):
        return x == 0
    return abs(x) <= tol


class Series:
    """Exact truncated Laurent expansion in one chart.

    ``coeffs[i]`` is the coefficient of ``z**(val + i)``.  When ``order`` is
    finite the list covers ``val..order``; when it is ``INF`` exponents past
    the list are zero.  The zero series has ``val = INF``.
    """

    __slots__ = ("chart", "val", "coeffs", "order", "mode", "ctx")

    def __init__(self, chart: str, val, coeffs, order, mode: str = EXACT, ctx=None):
        self.chart = chart
        self.mode = mode
        self.ctx = ctx
        coeffs = list(coeffs)
        if mode == EXACT:
            coeffs = [c if type(c) is Fraction else Fraction(c) for c in coeffs]
        if val != INF:
            # strip exact leading zeros so the valuation is honest
            i = 0
            while i < len(coeffs) and _exact_zero(coeffs[i]):
                i += 1
            coeffs = coeffs[i:]
            val = val + i
            if order != INF:
                keep = order - val + 1
                if keep <= 0:
                    coeffs = []
                else:
                    coeffs = coeffs[:keep]
                    coeffs += [_zero_like(mode, ctx)] * (keep - len(coeffs))
            else:
                while coeffs and _exact_zero(coeffs[-1]):
                    coeffs.pop()
            if not coeffs:
                val = INF
        else:
            coeffs = []
        self.val = val
        self.coeffs = tuple(coeffs)
        self.order = order

    # -- constructors ---------------------------------------------------
    @classmethod
    def monomial(cls, chart, e: int, c=1, order=INF, mode=EXACT, ctx=None):
        c = Fraction(c) if mode == EXACT else ctx.mpmathify(c)
        return cls(chart, e, [c], order, mode, ctx)

    @classmethod
    def zero(cls, chart, order=INF, mode=EXACT, ctx=None):
        return cls(chart, INF, [], order, mode, ctx)

    @classmethod
    def from_dict(cls, chart, d: dict, order=INF, mode=EXACT, ctx=None):
        d = {e: c for e, c in d.items() if not _exact_zero(c)}
        if not d:
            return cls.zero(chart, order, mode, ctx)
        lo, hi = min(d), max(d)
        if order != INF:
            hi = max(hi, order)
        zero = _zero_like(mode, ctx)
        return cls(chart, lo, [d.get(e, zero) for e in range(lo, hi + 1)], order, mode, ctx)

    # -- access ---------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return self.val == INF

    @property
    def top(self):
        """Largest exponent with a stored coefficient."""
        if self.is_zero:
            return -INF
        return self.val + len(self.coeffs) - 1

    def coef(self, e: int):
        if e > self.order:
            raise TruncationError(f"coefficient of z^{e} unknown (guaranteed order {self.order})")
        if self.is_zero or e < self.val:
            return _zero_like(self.mode, self.ctx)
        i = e - self.val
        if i < len(self.coeffs):
            return self.coeffs[i]
        return _zero_like(self.mode, self.ctx)

    def items(self):
        if self.is_zero:
            return
        for i, c in enumerate(self.coeffs):
            yield self.val + i, c

    def valuation(self, tol=None):
        """Lowest exponent whose coefficient exceeds ``tol`` in size."""
        if tol is None:
            return self.val
        for e, c in self.items():
            if abs(c) > tol:
                return e
        return INF

    def truncate(self, order):
        if order >= self.order:
            return self
        return Series(self.chart, self.val, self.coeffs, order, self.mode, self.ctx)

    # -- arithmetic -----------------------------------------------------
    def _check(self, other: "Series"):
        if self.chart != other.chart:
            raise ChartMismatch(f"{self.chart} vs {other.chart}")
        if self.mode != other.mode:
            raise ModeMismatch(f"{self.mode} vs {other.mode}")

    def __neg__(self):
        return Series(self.chart, self.val, [-c for c in self.coeffs], self.order, self.mode, self.ctx)

    def scale(self, s):
        if _exact_zero(s):
            return Series.zero(self.chart, self.order, self.mode, self.ctx)
        return Series(self.chart, self.val, [s * c for c in self.coeffs], self.order, self.mode, self.ctx)

    def __add__(self, other: "Series"):
        self._check(other)
        order = min(self.order, other.order)
        if self.is_zero:
            return other.truncate(order)
        if other.is_zero:
            return self.truncate(order)
        lo = min(self.val, other.val)
        hi = max(self.top, other.top)
        if order != INF:
            hi = min(hi, order)
        out = {}
        for e, c in self.items():
            if e <= hi:
                out[e] = c
        for e, c in other.items():
            if e <= hi:
                out[e] = out[e] + c if e in out else c
        return Series.from_dict(self.chart, out, order, self.mode, self.ctx) if out else \
            Series.zero(self.chart, order, self.mode, self.ctx)

    def __sub__(self, other: "Series"):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Series):
            return self.scale(other)
        self._check(other)
        if self.is_zero or other.is_zero:
            if self.is_zero and other.is_zero:
                order = INF if self.order == INF and other.order == INF else min(self.order, other.order)
            elif self.is_zero:
                order = self.order + other.val if other.val != INF else self.order
            else:
                order = other.order + self.val
            return Series.zero(self.chart, order, self.mode, self.ctx)
        val = self.val + other.val
        order = min(self.order + other.val, other.order + self.val)
        hi = self.top + other.top
        if order != INF:
            hi = min(hi, order)
        n = hi - val + 1
        if n <= 0:
            return Series.zero(self.chart, order, self.mode, self.ctx)
        a, b = self.coeffs, other.coeffs
        zero = _zero_like(self.mode, self.ctx)
        out = [zero] * n
        for i, ai in enumerate(a):
            if i >= n:
                break
            if _exact_zero(ai):
                continue
            lim = min(len(b), n - i)
            for j in range(lim):
                out[i + j] += ai * b[j]
        return Series(self.chart, val, out, order, self.mode, self.ctx)

    __rmul__ = __mul__

    def derivative(self):
        if self.is_zero:
            return Series.zero(self.chart, self.order - 1, self.mode, self.ctx)
        out = {e - 1: e * c for e, c in self.items() if e != 0}
        return Series.from_dict(self.chart, out, self.order - 1, self.mode, self.ctx)

    def inverse(self):
        """Multiplicative inverse; needs a nonzero leading coefficient."""
        if self.is_zero:
            raise ZeroDivisionError("inverse of the zero series")
        if self.order == INF and len(self.coeffs) == 1:
            return Series(self.chart, -self.val, [1 / self.coeffs[0]], INF, self.mode, self.ctx)
        if self.order == INF:
            raise TruncationError("inverse of a non-monomial exact polynomial is an infinite series; truncate first")
        rel = self.order - self.val  # relative precision
        a = self.coeffs
        inv0 = 1 / a[0]
        b = [inv0]
        for n in range(1, rel + 1):
            s = _zero_like(self.mode, self.ctx)
            for j in range(1, min(n, len(a) - 1) + 1):
                s += a[j] * b[n - j]
            b.append(-s * inv0)
        return Series(self.chart, -self.val, b, -self.val + rel, self.mode, self.ctx)

    def __pow__(self, p: int):
        if p < 0:
            return self.inverse() ** (-p)
        result = Series.monomial(self.chart, 0, 1, INF, self.mode, self.ctx)
        base = self
        while p:
            if p & 1:
                result = result * base
            p >>= 1
            if p:
                base = base * base
        return result

    def shift_exponent(self, s: int):
        """Multiply by ``z**s``."""
        if self.is_zero:
            return Series.zero(self.chart, self.order + s, self.mode, self.ctx)
        return Series(self.chart, self.val + s, self.coeffs, self.order + s, self.mode, self.ctx)

    def equals(self, other: "Series", tol=0) -> bool:
        """Agreement on every exponent both series guarantee."""
        self._check(other)
        order = min(self.order, other.order)
        lo = min(self.val, other.val)
        if lo == INF:
            return True
        hi = max(self.top, other.top)
        if order != INF:
            hi = min(hi, order)
        if hi == -INF:
            return True
        for e in range(int(lo), int(hi) + 1):
            if not is_zero(self.coef(e) - other.coef(e), tol):
                return False
        return True

    def to_text(self, digits: int = 20) -> str:
        """Human-readable expansion such as ``z^3`` or ``-2/3 z^-1 + 1``."""
        parts = []
        for e, c in self.items():
            if _exact_zero(c):
                continue
            if isinstance(c, Fraction):
                coef = "" if c == 1 and e != 0 else ("-" if c == -1 and e != 0 else str(c))
            else:
                coef = f"({self.ctx.nstr(c, digits)})"
            mono = "" if e == 0 else f"z^{e}"
            parts.append(f"{coef} {mono}".strip() if coef not in ("", "-") else coef + mono)
        body = " + ".join(parts).replace("+ -", "- ") or "0"
        if self.order != INF:
            body += f" + O(z^{self.order + 1})"
        return body

    def __repr__(self):
        if self.is_zero:
            body = "0"
        else:
            body = " + ".join(f"({c})z^{e}" for e, c in self.items() if not _exact_zero(c)) or "0"
        order = "exact" if self.order == INF else f"O(z^{self.order + 1})"
        return f"Series[{self.chart}]({body}; {order})"


def _exact_zero(c) -> bool:
    # exact zero check valid for Fraction and mpmath numbers
    return c == 0


def series_mul(a: Series, b: Series) -> Series:
    return a * b


# ---------------------------------------------------------------------------
# tensors

@dataclass(frozen=True)
class KNTensor:
    """A tensor ``F dz^w`` given by its expansions at both marked points."""

    weight: int
    plus: Series
    minus: Series
    label: Optional[int] = None

    @property
    def mode(self):
        return self.plus.mode

    def chart(self, at: str) -> Series:
        if at == PLUS:
            return self.plus
        if at == MINUS:
            return self.minus
        raise ChartMismatch(at)

    def __add__(self, other: "KNTensor"):
        _same_weight(self, other)
        return KNTensor(self.weight, self.plus + other.plus, self.minus + other.minus)

    def __sub__(self, other: "KNTensor"):
        _same_weight(self, other)
        return KNTensor(self.weight, self.plus - other.plus, self.minus - other.minus)

    def __neg__(self):
        return KNTensor(self.weight, -self.plus, -self.minus, None)

    def scale(self, s):
        return KNTensor(self.weight, self.plus.scale(s), self.minus.scale(s))

    def __mul__(self, other):
        if isinstance(other, KNTensor):
            return tensor_mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def truncate(self, order):
        return KNTensor(self.weight, self.plus.truncate(order), self.minus.truncate(order), self.label)

    def is_zero(self) -> bool:
        return self.plus.is_zero and self.minus.is_zero


def _same_weight(s: KNTensor, t: KNTensor):
    if s.weight != t.weight:
        raise ValueError(f"weights differ: {s.weight} vs {t.weight}")


def tensor_mul(s: KNTensor, t: KNTensor, allow_any_weight: bool = False) -> KNTensor:
    w = s.weight + t.weight
    if not allow_any_weight and w not in (-1, 0, 1, 2):
        raise ValueError(f"product weight {w} outside {{-1,0,1,2}}")
    return KNTensor(w, s.plus * t.plus, s.minus * t.minus)


def lie_derivative(e: KNTensor, t: KNTensor) -> KNTensor:
    """Lie derivative ``(E F' + w E' F) dz^w`` of ``t`` along ``e = E d/dz``.

    For ``t`` a vector field this is the bracket ``[e, t]``.
    """
    if e.weight != -1:
        raise ValueError("first argument must be a vector field")

    def chartwise(E: Series, F: Series) -> Series:
        out = E * F.derivative()
        if t.weight:
            out = out + (E.derivative() * F).scale(t.weight)
        return out

    return KNTensor(t.weight, chartwise(e.plus, t.plus), chartwise(e.minus, t.minus))


def differential(f: KNTensor) -> KNTensor:
    """``dA`` for a function ``A``."""
    if f.weight != 0:
        raise ValueError("differential of a non-function")
    return KNTensor(1, f.plus.derivative(), f.minus.derivative())


def residue_series(s: Series):
    if s.order < -1:
        raise TruncationError(f"residue undetermined: guaranteed order {s.order} < -1")
    return s.coef(-1)


def residue(t: KNTensor, at: str = PLUS):
    if t.weight != 1:
        raise ValueError(f"residue of a weight-{t.weight} tensor")
    return residue_series(t.chart(at))


def chart_transfer(s: Series, weight: int) -> Series:
    """Genus-0 change of chart ``z = 1/u`` for a tensor of the given weight.

    Multiplies ``s(1/u)`` by ``(dz/du)**weight = (-u**-2)**weight``.  Needs a
    completely known expansion: a truncated one has unknown coefficients at
    arbitrarily negative powers of ``u``.
    """
    if s.order != INF:
        raise TruncationError("chart transfer needs an exact (untruncated) expansion")
    target = MINUS if s.chart == PLUS else PLUS
    sign = -1 if weight % 2 else 1
    out = {}
    for e, c in s.items():
        out[-e - 2 * weight] = c * sign
    return Series.from_dict(target, out, INF, s.mode, s.ctx)


def leading_order(t: KNTensor, at: str, tol=None):
    return t.chart(at).valuation(tol)


def as_scalar(x, mode: str, ctx=None):
    if mode == EXACT:
        if isinstance(x, str):
            return Fraction(x)
        return Fraction(x)
    if isinstance(x, complex):
        return ctx.mpc(x.real, x.imag)
    return ctx.mpmathify(x)


def scalars_equal(a, b, tol=0) -> bool:
    return is_zero(a - b, tol)
