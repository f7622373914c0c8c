"""Surface providers: KN bases of functions, vector fields, 1-forms and
quadratic differentials on two-point surfaces of genus 0 and 1.

Genus 0 is the Riemann sphere with ``P+ = 0`` and ``P- = infinity``; every
basis element is a monomial and all arithmetic is exact.

Genus 1 is the torus ``C / lattice(g2, g3)`` with ``P+ = 0`` and ``P- = w``.
Functions are built from Weierstrass sigma factors,

    A_m(z) = c * sigma(z)**m * sigma(z - w)**(-m-1) * sigma(z - (m+1) w)

for ``m`` outside ``{-1, 0}``, with ``A_0 = 1`` and
``A_{-1} = zeta(z) - zeta(z - w) - zeta(w)``.  The holomorphic differential
``dz`` identifies every tensor weight with functions:
``e_m = A_{m+1} d/dz``, ``omega^n = A_{-n-1} dz`` and
``Omega^k = A_{-k-2} dz^2``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import mpmath

from .jets import (EXACT, FLOAT, INF, MINUS, PLUS, KNTensor, Series,
                   TruncationError, residue)


class SurfaceError(ValueError):
    pass


@dataclass(frozen=True)
class SurfaceSpec:
    genus: int = 0
    truncation_order: int = 24
    g2: complex = 4.0
    g3: complex = 1.0
    w: complex = complex(0.3, 0.2)
    precision_bits: int = 192

    def __post_init__(self):
        if self.genus not in (0, 1):
            raise SurfaceError(f"genus {self.genus} not supported (0 or 1)")
        if self.truncation_order < 1:
            raise SurfaceError("truncation order must be positive")
        if self.genus == 1:
            if self.w == 0:
                raise SurfaceError("marked points coincide (w = 0)")
            if abs(self.g2) ** 3 == 0 and self.g3 == 0:
                raise SurfaceError("degenerate lattice (g2 = g3 = 0)")
            if self.precision_bits < 32:
                raise SurfaceError("precision below 32 bits")

    @property
    def mode(self) -> str:
        return EXACT if self.genus == 0 else FLOAT

    def as_dict(self) -> dict:
        d = {"genus": self.genus, "truncation_order": self.truncation_order, "mode": self.mode}
        if self.genus == 1:
            d.update(g2_re=repr(self.g2.real), g2_im=repr(self.g2.imag),
                     g3_re=repr(self.g3.real), g3_im=repr(self.g3.imag),
                     w_re=repr(self.w.real), w_im=repr(self.w.imag),
                     precision_bits=self.precision_bits)
        return d


CONFIG_KEYS = ("genus", "truncation_order", "g2_re", "g2_im", "g3_re", "g3_im",
               "w_re", "w_im", "precision_bits")


def parse_config(text: str) -> dict:
    """Parse ``key=value`` lines (``#`` comments and blank lines ignored)."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SurfaceError(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise SurfaceError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def spec_from_mapping(d: dict) -> SurfaceSpec:
    kw = {}
    if "genus" in d:
        kw["genus"] = int(d["genus"])
    if "truncation_order" in d:
        kw["truncation_order"] = int(d["truncation_order"])
    if "precision_bits" in d:
        kw["precision_bits"] = int(d["precision_bits"])
    for name in ("g2", "g3", "w"):
        if f"{name}_re" in d or f"{name}_im" in d:
            default = getattr(SurfaceSpec, name)
            re_ = float(d.get(f"{name}_re", default.real if isinstance(default, complex) else default))
            im_ = float(d.get(f"{name}_im", 0.0))
            kw[name] = complex(re_, im_)
    try:
        return SurfaceSpec(**kw)
    except TypeError as exc:  # pragma: no cover - defensive
        raise SurfaceError(str(exc)) from exc


def from_config(path) -> SurfaceSpec:
    with open(path) as fh:
        return spec_from_mapping(parse_config(fh.read()))


@dataclass(frozen=True)
class BasisWindow:
    functions: tuple = (-10, 10)
    vectors: tuple = (-10, 10)
    oneforms: tuple = (-10, 10)
    quadratics: tuple = (-10, 10)

    @classmethod
    def symmetric(cls, M: int):
        r = (-M, M)
        return cls(r, r, r, r)

    def required_order(self, genus: int) -> int:
        M = max(abs(x) for r in (self.functions, self.vectors, self.oneforms, self.quadratics) for x in r)
        return 2 * M + 3 * genus + 4


# ---------------------------------------------------------------------------
# Weierstrass sigma

def sigma_coefficients(g2, g3, max_exponent: int, ctx=None) -> list:
    """Taylor coefficients ``s[0..max_exponent]`` of sigma at the origin.

    Uses the two-index Weierstrass recursion.  With ``ctx=None`` and rational
    ``g2, g3`` the result is exact.
    """
    if ctx is None:
        g2, g3 = Fraction(g2), Fraction(g3)
        third = Fraction(1, 3)
        sixteen_thirds = Fraction(16, 3)
        one = Fraction(1)
    else:
        g2, g3 = ctx.mpmathify(g2), ctx.mpmathify(g3)
        third = ctx.mpf(1) / 3
        sixteen_thirds = ctx.mpf(16) / 3
        one = ctx.mpf(1)
    zero = one * 0
    # a[(m, n)] for weights 4m + 6n <= max_exponent - 1
    a = {}
    wmax = max_exponent - 1

    def get(m, n):
        if m < 0 or n < 0:
            return zero
        return a.get((m, n), zero)

    for wt in range(0, wmax + 1, 2):
        for n in range(wt // 6 + 1):
            rest = wt - 6 * n
            if rest % 4:
                continue
            m = rest // 4
            if m == 0 and n == 0:
                a[(0, 0)] = one
                continue
            val = (3 * (m + 1) * get(m + 1, n - 1)
                   + sixteen_thirds * (n + 1) * get(m - 2, n + 1)
                   - third * (2 * m + 3 * n - 1) * (4 * m + 6 * n - 1) * get(m - 1, n))
            a[(m, n)] = val
    s = [zero] * (max_exponent + 1)
    h2, h3 = g2 / 2, 2 * g3
    for (m, n), val in a.items():
        e = 4 * m + 6 * n + 1
        if e <= max_exponent:
            s[e] += val * h2 ** m * h3 ** n / math.factorial(e)
    return s


def sigma_series(g2, g3, K: int, ctx=None, chart=PLUS) -> Series:
    """sigma(z) at the origin, guaranteed to order ``K``."""
    if K < 1:
        raise ValueError("K must be at least 1")
    s = sigma_coefficients(g2, g3, K, ctx)
    mode = EXACT if ctx is None else FLOAT
    return Series(chart, 0, s, K, mode, ctx)


def weierstrass_p_coefficients(g2, g3, n_terms: int, ctx=None) -> list:
    """Coefficients ``c_k`` of ``p(z) = z**-2 + sum_k c_k z**(2k-2)`` for k = 2..n_terms."""
    if ctx is None:
        g2, g3 = Fraction(g2), Fraction(g3)
    c = {2: g2 / 20, 3: g3 / 28}
    for k in range(4, n_terms + 1):
        tot = sum(c[m] * c[k - m] for m in range(2, k - 1))
        c[k] = tot * 3 / ((2 * k + 1) * (k - 3))
    return [c[k] for k in range(2, n_terms + 1)]


# ---------------------------------------------------------------------------
# providers

class Genus0Surface:
    genus = 0
    mode = EXACT
    ctx = None
    tol = 0

    def __init__(self, spec: Optional[SurfaceSpec] = None):
        self.spec = spec or SurfaceSpec(genus=0)

    def scalar(self, x):
        return Fraction(x)

    def _tensor(self, weight, plus_exp, label):
        # z = 1/u and dz = -u^-2 du
        sign = -1 if weight % 2 else 1
        plus = Series.monomial(PLUS, plus_exp, 1)
        minus = Series.monomial(MINUS, -plus_exp - 2 * weight, sign)
        return KNTensor(weight, plus, minus, label)

    def function(self, m: int) -> KNTensor:
        return self._tensor(0, m, m)

    def vector(self, m: int) -> KNTensor:
        return self._tensor(-1, m + 1, m)

    def oneform(self, n: int) -> KNTensor:
        return self._tensor(1, -n - 1, n)

    def quadratic(self, k: int) -> KNTensor:
        return self._tensor(2, -k - 2, k)

    def dz(self, weight: int) -> KNTensor:
        """The tensor ``dz**weight`` (``d/dz`` for weight -1)."""
        return self._tensor(weight, 0, None)

    def constant(self, c) -> KNTensor:
        c = Fraction(c)
        return KNTensor(0, Series.monomial(PLUS, 0, c), Series.monomial(MINUS, 0, c))

    def zero(self, weight: int) -> KNTensor:
        return KNTensor(weight, Series.zero(PLUS), Series.zero(MINUS))

    def expected_orders(self, family: str, m: int):
        plus = {"function": m, "vector": m + 1, "oneform": -m - 1, "quadratic": -m - 2}[family]
        minus = {"function": -m, "vector": -m + 1, "oneform": m - 1, "quadratic": m - 2}[family]
        return plus, minus


class Genus1Surface:
    genus = 1
    mode = FLOAT

    def __init__(self, spec: SurfaceSpec):
        if spec.genus != 1:
            raise SurfaceError("Genus1Surface needs genus 1")
        self.spec = spec
        ctx = mpmath.MPContext()
        ctx.prec = spec.precision_bits
        self.ctx = ctx
        self.tol = ctx.mpf(2) ** (-(spec.precision_bits // 2))
        self.K = spec.truncation_order
        self.g2 = ctx.mpmathify(spec.g2)
        self.g3 = ctx.mpmathify(spec.g3)
        self.w = ctx.mpmathify(spec.w)
        self._lock = threading.Lock()
        self._memo = {}
        # guard digits for Taylor shifts of sigma by large arguments
        self._guard = 64
        self._nsigma = 0
        self._sigma = []

    # -- scalars --------------------------------------------------------
    def scalar(self, x):
        if isinstance(x, Fraction):
            return self.ctx.mpf(x.numerator) / x.denominator
        return self.ctx.mpmathify(x)

    # -- sigma machinery ------------------------------------------------
    def _sigma_coeffs(self, n: int):
        if n > self._nsigma:
            with self.ctx.workprec(self.ctx.prec + self._guard):
                self._sigma = sigma_coefficients(self.g2, self.g3, n, self.ctx)
            self._nsigma = n
        return self._sigma

    def _terms_needed(self, c, R: int) -> int:
        # sigma is entire of order 2; the shifted tail is negligible once
        # n is well past the peak of |c|**n / Gamma(n/4) type terms
        r = float(abs(c))
        return int(R + 40 + 3 * r * r + 8 * r + self.spec.precision_bits / 4)

    def shifted_sigma(self, c, R: int, chart: str) -> Series:
        """sigma(t + c) as a series in t, guaranteed to order R."""
        key = ("shift", self._key(c), R, chart)
        if key in self._memo:
            return self._memo[key]
        ctx = self.ctx
        if c == 0:
            s = self._sigma_coeffs(max(R, 1))
            out = Series(chart, 0, [ctx.mpmathify(x) for x in s[:R + 1]], R, FLOAT, ctx)
        else:
            N = self._terms_needed(c, R)
            s = self._sigma_coeffs(N)
            coeffs = []
            with ctx.workprec(ctx.prec + self._guard):
                cc = ctx.mpmathify(c)
                powers = [ctx.mpf(1)]
                for _ in range(N):
                    powers.append(powers[-1] * cc)
                for j in range(R + 1):
                    tot = ctx.mpf(0)
                    binom = 1
                    for n in range(j, N + 1):
                        if n > j:
                            binom = binom * n // (n - j)
                        tot += s[n] * binom * powers[n - j]
                    coeffs.append(tot)
            coeffs = [+x for x in coeffs]
            out = Series(chart, 0, coeffs, R, FLOAT, ctx)
        self._memo[key] = out
        return out

    def _key(self, c):
        return (float(self.ctx.re(c)).hex(), float(self.ctx.im(c)).hex(), str(c))

    def sigma_at(self, z):
        """sigma evaluated at a point (direct summation)."""
        ctx = self.ctx
        z = ctx.mpmathify(z)
        N = self._terms_needed(z, 0)
        s = self._sigma_coeffs(N)
        with ctx.workprec(ctx.prec + self._guard):
            tot = ctx.mpf(0)
            p = ctx.mpf(1)
            for n in range(N + 1):
                tot += s[n] * p
                p *= z
        return +tot

    def zeta_series(self, c, R: int, chart: str) -> Series:
        """zeta(t + c) = sigma'/sigma as a series in t to order R."""
        if c == 0:
            sig = self.shifted_sigma(0, R + 2, chart)
            return (sig.derivative() * sig.inverse()).truncate(R)
        sig = self.shifted_sigma(c, R + 1, chart)
        return (sig.derivative() * sig.inverse()).truncate(R)

    def zeta_at(self, z):
        ctx = self.ctx
        z = ctx.mpmathify(z)
        N = self._terms_needed(z, 0)
        s = self._sigma_coeffs(N)
        with ctx.workprec(ctx.prec + self._guard):
            val = ctx.mpf(0)
            der = ctx.mpf(0)
            p = ctx.mpf(1)
            for n in range(N + 1):
                val += s[n] * p
                if n + 1 <= N:
                    der += (n + 1) * s[n + 1] * p
                p *= z
            return +(der / val)

    # -- functions ------------------------------------------------------
    def _general_factors(self, m: int, chart: str, R: int):
        """Factors of sigma(z)^m sigma(z-w)^(-m-1) sigma(z-(m+1)w) in the chart."""
        w = self.w
        if chart == PLUS:
            shifts = (0, -w, -(m + 1) * w)
        else:
            # z = u + w
            shifts = (w, 0, -m * w)
        return [(self.shifted_sigma(c, R, chart), e) for c, e in zip(shifts, (m, -m - 1, 1))]

    def _power(self, s: Series, e: int, R: int) -> Series:
        if e == 0:
            return Series.monomial(s.chart, 0, 1, INF, FLOAT, self.ctx)
        if s.val == INF:
            raise SurfaceError("sigma factor vanishes identically")
        if e > 0:
            return s ** e
        return s.inverse() ** (-e)

    def _raw_function(self, m: int, chart: str, K: int) -> Series:
        ctx = self.ctx
        R = K + 2 * abs(m) + 8
        out = None
        for s, e in self._general_factors(m, chart, R):
            p = self._power(s, e, R)
            out = p if out is None else out * p
        return out

    def _normalizer(self, m: int):
        w = self.w
        return self.sigma_at(-w) ** (m + 1) / self.sigma_at(-(m + 1) * w)

    def function_series(self, m: int, chart: str, K: Optional[int] = None) -> Series:
        K = self.K if K is None else K
        key = ("A", m, chart, K)
        with self._lock:
            if key in self._memo:
                return self._memo[key]
        ctx = self.ctx
        if m == 0:
            out = Series(chart, 0, [ctx.mpf(1)], K, FLOAT, ctx)
        elif m == -1:
            zw = self.zeta_at(self.w)
            if chart == PLUS:
                s = self.zeta_series(0, K + 2, chart) - self.zeta_series(-self.w, K + 2, chart)
            else:
                s = self.zeta_series(self.w, K + 2, chart) - self.zeta_series(0, K + 2, chart)
            s = s - Series(chart, 0, [zw], INF, FLOAT, ctx)
            out = s.truncate(K)
        else:
            raw = self._raw_function(m, chart, K)
            out = (raw.scale(self._normalizer(m))).truncate(K)
        with self._lock:
            self._memo[key] = out
        return out

    def _tensor(self, weight: int, fidx: int, label) -> KNTensor:
        return KNTensor(weight, self.function_series(fidx, PLUS), self.function_series(fidx, MINUS), label)

    def function(self, m: int) -> KNTensor:
        return self._tensor(0, m, m)

    def vector(self, m: int) -> KNTensor:
        return self._tensor(-1, m + 1, m)

    def oneform(self, n: int) -> KNTensor:
        return self._tensor(1, -n - 1, n)

    def quadratic(self, k: int) -> KNTensor:
        return self._tensor(2, -k - 2, k)

    def dz(self, weight: int) -> KNTensor:
        return self._tensor(weight, 0, None)

    def constant(self, c) -> KNTensor:
        c = self.scalar(c)
        return KNTensor(0, Series(PLUS, 0, [c], INF, FLOAT, self.ctx), Series(MINUS, 0, [c], INF, FLOAT, self.ctx))

    def zero(self, weight: int) -> KNTensor:
        return KNTensor(weight, Series.zero(PLUS, INF, FLOAT, self.ctx), Series.zero(MINUS, INF, FLOAT, self.ctx))

    def expected_orders(self, family: str, m: int):
        """Orders at (P+, P-) prescribed for the element of the given family."""
        fidx = {"function": m, "vector": m + 1, "oneform": -m - 1, "quadratic": -m - 2}[family]
        if fidx == 0:
            return 0, 0
        if fidx == -1:
            return -1, -1
        return fidx, -fidx - 1

    # -- lattice data (used for checks) ---------------------------------
    def roots(self):
        ctx = self.ctx
        return ctx.polyroots([4, 0, -self.g2, -self.g3], maxsteps=200, extraprec=2 * ctx.prec)

    def periods(self):
        """Half-periods (omega1, omega3) from the arithmetic-geometric mean.

        Assumes real ``g2, g3`` with positive discriminant (three real roots).
        """
        ctx = self.ctx
        e = sorted((ctx.re(r) for r in self.roots()), reverse=True)
        e1, e2, e3 = e
        w1 = ctx.pi / (2 * ctx.agm(ctx.sqrt(e1 - e3), ctx.sqrt(e1 - e2)))
        w3 = 1j * ctx.pi / (2 * ctx.agm(ctx.sqrt(e1 - e3), ctx.sqrt(e2 - e3)))
        return w1, w3

    def function_at(self, m: int, z):
        """Direct evaluation of the basis function at a point (no series)."""
        ctx = self.ctx
        z = ctx.mpmathify(z)
        w = self.w
        if m == 0:
            return ctx.mpf(1)
        if m == -1:
            return self.zeta_at(z) - self.zeta_at(z - w) - self.zeta_at(w)
        return (self._normalizer(m) * self.sigma_at(z) ** m * self.sigma_at(z - w) ** (-m - 1)
                * self.sigma_at(z - (m + 1) * w))


@lru_cache(maxsize=16)
def make_surface(spec: SurfaceSpec):
    if spec.genus == 0:
        return Genus0Surface(spec)
    return Genus1Surface(spec)


def _surface(spec_or_surface):
    if isinstance(spec_or_surface, SurfaceSpec):
        return make_surface(spec_or_surface)
    return spec_or_surface


def basis_function(spec, m: int) -> KNTensor:
    return _surface(spec).function(m)


def basis_vector(spec, m: int) -> KNTensor:
    return _surface(spec).vector(m)


def basis_oneform(spec, n: int) -> KNTensor:
    return _surface(spec).oneform(n)


def basis_quadratic(spec, k: int) -> KNTensor:
    return _surface(spec).quadratic(k)


def expand_function(spec, A: KNTensor, window: tuple) -> dict:
    """Coefficients of ``A`` over the basis functions in the index window.

    Coefficients come from the duality pairing with the 1-form basis; the
    expansion is checked by reconstruction at ``P+``.
    """
    S = _surface(spec)
    if A.weight != 0:
        raise SurfaceError("triple_decompose needs a function")
    lo, hi = window
    if A.plus.is_zero and A.minus.is_zero:
        return {}
    coeffs = {}
    for m in range(lo, hi + 1):
        c = residue(A * S.oneform(m))
        if not _negligible(c, S.tol):
            coeffs[m] = c
    recon = S.zero(0)
    for m, c in coeffs.items():
        recon = recon + S.function(m).scale(c)
    diff = A.plus - recon.plus
    if S.genus == 1:
        # compare only the exponents both sides certify
        bad = any(abs(c) > S.tol * 1024 for _, c in diff.items())
    else:
        bad = not diff.is_zero
    if bad:
        raise SurfaceError("function not resolvable within the basis window")
    return coeffs


def _negligible(c, tol) -> bool:
    if tol == 0:
        return c == 0
    return abs(c) <= tol


def triple_decompose(spec, A: KNTensor, window: tuple = (-12, 12)):
    """Split ``A`` into (negative, middle, positive) parts over the KN basis.

    The middle block holds indices ``-g <= m <= 0``.  Each part is returned as a
    dict ``index -> coefficient``.
    """
    S = _surface(spec)
    coeffs = expand_function(S, A, window)
    g = S.genus
    neg = {m: c for m, c in coeffs.items() if m < -g}
    mid = {m: c for m, c in coeffs.items() if -g <= m <= 0}
    pos = {m: c for m, c in coeffs.items() if m > 0}
    return neg, mid, pos


def combine(spec, coeffs: dict, family: str = "function") -> KNTensor:
    S = _surface(spec)
    maker = getattr(S, family)
    weight = {"function": 0, "vector": -1, "oneform": 1, "quadratic": 2}[family]
    out = S.zero(weight)
    for m, c in coeffs.items():
        out = out + maker(m).scale(c)
    return out
