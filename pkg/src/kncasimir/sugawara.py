"""Sugawara operators on genus-0 wedge spaces and their commutator checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from .fock import (SPHERE, AlgebraElement, FockConfig, LinComb, Operator, Product,
                   WindowError, _cur, commutator, element_operator, identity,
                   is_zero_matrix, mat_bracket, mat_mul, mat_add, mat_scale, matrix,
                   measure_cocycle, safe_window, scalar_defect, test_states, trace,
                   unit)
from .jets import PLUS, residue
from .linalg import solve
from .pairing import affine_cocycle, structure_constants, vector_cocycle


class CriticalLevel(ValueError):
    pass


# ---------------------------------------------------------------------------
# Lie algebra data

def trace_form(x, y):
    return trace(mat_mul(x, y))


def dual_basis(basis):
    """Dual basis with respect to ``tr(xy)``."""
    n = len(basis)
    gram = [[trace_form(a, b) for b in basis] for a in basis]
    duals = []
    for j in range(n):
        # solve gram @ c = e_j
        rows = [{i2: gram[i][i2] for i2 in range(n) if gram[i][i2]} for i in range(n)]
        sol, bad, free = solve(rows, [1 if i == j else 0 for i in range(n)], list(range(n)))
        if bad or free:
            raise ValueError("trace form degenerate on the given basis")
        d = mat_scale(basis[0], 0)
        for i in range(n):
            d = mat_add(d, mat_scale(basis[i], sol[i]))
        duals.append(d)
    return list(zip(basis, duals))


def casimir_element(pairs):
    """``sum u_i u^i`` as a matrix in the defining representation."""
    out = mat_scale(pairs[0][0], 0)
    for u, ud in pairs:
        out = mat_add(out, mat_mul(u, ud))
    return out


def adjoint_casimir_eigenvalue(pairs):
    """Eigenvalue of ``sum ad(u_i) ad(u^i)`` on the span of the basis (must be scalar)."""
    basis = [u for u, _ in pairs]
    dual = dict((i, ud) for i, (_, ud) in enumerate(pairs))
    # coordinates via the dual basis: y = sum tr(y u^i) u_i
    def coords(y):
        return [trace_form(y, dual[i]) for i in range(len(basis))]

    value = None
    for y in basis:
        acc = mat_scale(y, 0)
        for u, ud in pairs:
            acc = mat_add(acc, mat_bracket(u, mat_bracket(ud, y)))
        cy, ca = coords(y), coords(acc)
        ratio = None
        for a, b in zip(cy, ca):
            if a:
                ratio = b / a
                break
        if any(b != ratio * a for a, b in zip(cy, ca)):
            raise ValueError("adjoint casimir is not scalar")
        if value is None:
            value = ratio
        elif value != ratio:
            raise ValueError("adjoint casimir is not scalar")
    return value


def sl2_basis():
    return [unit(2, 1, 2), unit(2, 2, 1), matrix([[1, 0], [0, -1]])]


def sl2_alternative_basis():
    e, f, h = sl2_basis()
    return [mat_add(e, f), mat_add(e, f, -1), mat_add(h, e)]


@dataclass(frozen=True)
class SugawaraPart:
    name: str
    pairs: tuple
    kappa: Fraction
    level: Fraction

    @property
    def shifted_level(self):
        return self.level + self.kappa


@dataclass(frozen=True)
class SugawaraConfig:
    algebra: str
    fock: FockConfig
    parts: tuple

    @property
    def level(self):
        return self.parts[0].level

    @property
    def kappa(self):
        return self.parts[0].kappa


def measured_level(x, fock: FockConfig) -> Fraction:
    """Level from the central value on ``(x A_1, x A_-1)``."""
    val = measure_cocycle(AlgebraElement.current(x, 1), AlgebraElement.current(x, -1), fock)
    norm = trace_form(x, x) * affine_cocycle(SPHERE.function(1), SPHERE.function(-1))
    return val / norm


def make_part(name, basis, fock, level=None, probe=None) -> SugawaraPart:
    pairs = tuple(dual_basis(basis))
    if len(basis) == 1:
        kappa = Fraction(0)
    else:
        kappa = adjoint_casimir_eigenvalue(pairs) / 2
    if level is None:
        level = measured_level(probe if probe is not None else basis[-1], fock)
    return SugawaraPart(name, pairs, Fraction(kappa), Fraction(level))


def sugawara_config(algebra: str, fock: Optional[FockConfig] = None, level=None, abelian_part: bool = True) -> SugawaraConfig:
    """Build the Sugawara data for ``gl1``, ``sl2`` or the composite ``gl2``.

    ``abelian_part=False`` drops the identity direction of ``gl2`` (ablation).
    """
    if algebra == "gl1":
        fock = fock or FockConfig(1, 0)
        if fock.l != 1:
            raise ValueError("gl1 needs l = 1")
        parts = (make_part("gl1", [identity(1)], fock, level),)
    elif algebra == "sl2":
        fock = fock or FockConfig(2, 0)
        if fock.l != 2:
            raise ValueError("sl2 needs l = 2")
        parts = (make_part("sl2", sl2_basis(), fock, level),)
    elif algebra == "gl2":
        fock = fock or FockConfig(2, 0)
        if fock.l != 2:
            raise ValueError("gl2 needs l = 2")
        parts = [make_part("sl2", sl2_basis(), fock, level)]
        if abelian_part:
            parts.append(make_part("u1", [identity(2)], fock, level))
        parts = tuple(parts)
    else:
        raise ValueError(f"unknown algebra {algebra!r}")
    return SugawaraConfig(algebra, fock, parts)


# ---------------------------------------------------------------------------
# coefficients

def l_coefficient(S, k: int, n: int, m: int):
    """``res(omega^n omega^m e_k)``."""
    return residue(S.oneform(n) * S.oneform(m) * S.vector(k))


def l_coeffs(S, k: int, window: int = 8) -> dict:
    """Nonzero ``l_k^{nm}`` for ``|n|, |m| <= window``."""
    out = {}
    for n in range(-window, window + 1):
        for m in range(-window, window + 1):
            v = l_coefficient(S, k, n, m)
            if (v != 0) if S.tol == 0 else abs(v) > S.tol:
                out[(n, m)] = v
    return out


@lru_cache(maxsize=None)
def _l0(k, n, m):
    return l_coefficient(SPHERE, k, n, m)


# ---------------------------------------------------------------------------
# operators

def ordered(n: int, m: int):
    """Normal-ordered placement: the factor with the lower index goes left."""
    return (n, m) if n <= m else (m, n)


class SugawaraOperator(Operator):
    """``L_k = 1/2 sum_i sum_{n+m=k} l_k^{nm} :u_i(n) u^i(m):`` for one part."""

    def __init__(self, part: SugawaraPart, k: int, fock: FockConfig):
        self.part, self.k, self.fock = part, k, fock
        l = fock.l
        self.lower = max(0, -k) * l + 2 * (l - 1)
        self.upper = max(0, k) * l + 2 * (l - 1)
        self.name = f"L_{k}[{part.name}]"
        self._memo = {}

    def terms_for_degree(self, d: int):
        """Ordered quadratic terms that can act on a monomial of degree ``d``."""
        k, l = self.k, self.fock.l
        rmax = (-d + l - 1) // l
        rmin = -((-k) // 2)  # ceil(k/2)
        for r in range(rmin, rmax + 1):
            n = k - r
            for a, b in ((n, r), (r, n)) if n != r else ((n, r),):
                coef = _l0(k, a, b)
                if not coef:
                    continue
                left_idx, right_idx = ordered(a, b)
                for u, ud in self.part.pairs:
                    # :u(a) u^d(b): keeps the factor attached to the lower index on the left
                    left = u if left_idx == a else ud
                    right = ud if left_idx == a else u
                    yield Fraction(coef, 2), (left, left_idx), (right, right_idx)

    def apply_monomial(self, mono):
        hit = self._memo.get(mono)
        if hit is not None:
            return hit
        out = {}
        for coef, (x, a), (y, b) in self.terms_for_degree(mono.degree):
            if is_zero_matrix(x) or is_zero_matrix(y):
                continue
            R = _cur(y, b, self.fock)
            for m1, c1 in R.apply_monomial(mono).items():
                Lop = _cur(x, a, self.fock)
                for m2, c2 in Lop.apply_monomial(m1).items():
                    out[m2] = out.get(m2, 0) + coef * c1 * c2
        out = {m: c for m, c in out.items() if c != 0}
        self._memo[mono] = out
        return out


_L_CACHE = {}


def sugawara_L(config: SugawaraConfig, k: int, part: Optional[int] = None) -> Operator:
    """Unnormalized ``L_k``; the sum over parts unless ``part`` is given."""
    parts = config.parts if part is None else (config.parts[part],)
    ops = []
    for p in parts:
        key = (p, k, config.fock)
        if key not in _L_CACHE:
            _L_CACHE[key] = SugawaraOperator(p, k, config.fock)
        ops.append((Fraction(1), _L_CACHE[key]))
    return LinComb(ops)


def normalized_L(config: SugawaraConfig, k: int) -> Operator:
    """``L*_k = -(c + kappa)^-1 L_k`` summed part by part."""
    terms = []
    for i, p in enumerate(config.parts):
        s = p.shifted_level
        if s == 0:
            raise CriticalLevel(f"critical level in part {p.name}")
        terms.append((-1 / s, sugawara_L(config, k, i)))
    return LinComb(terms)


def normalized_T(config: SugawaraConfig, e: dict) -> Operator:
    """``T(e) = sum lambda_k L*_k`` for ``e = sum lambda_k e_k`` given as ``{k: lambda_k}``."""
    return LinComb([(Fraction(c), normalized_L(config, k)) for k, c in e.items() if c])


STATE_SAMPLE = 48


def _window_states(config: SugawaraConfig, ops, states=None, count: int = STATE_SAMPLE):
    if states is not None:
        return states
    lo, _ = safe_window(ops, config.fock.window, config.fock.l)
    return test_states(config.fock, lo, count=count)


def difference_report(op: Operator, states) -> dict:
    bad = []
    for mono in states:
        res = op.apply_monomial(mono)
        if res:
            bad.append({"state": mono.to_json(), "image": [{"monomial": m.to_json(), "coef": str(c)} for m, c in res.items()]})
    return {"zero": not bad, "tested": len(states), "violations": bad}


def sugawara_commutator_defect(config: SugawaraConfig, k: int, r: int, x, states=None) -> dict:
    """``[L_k, x(r)] + (c + kappa) x(e_k A_r)`` (normalized form for several parts)."""
    fock = config.fock
    xr = _cur(matrix(x), r, fock)
    eA = structure_constants(SPHERE, "LA", k, r)
    rhs = LinComb([(c, _cur(matrix(x), j, fock)) for j, c in eA.items()])
    if len(config.parts) == 1:
        L = sugawara_L(config, k)
        s = config.parts[0].shifted_level
        op = commutator(L, xr) + s * rhs
    else:
        L = normalized_L(config, k)
        op = commutator(L, xr) - rhs
    sts = _window_states(config, [L, xr], states)
    rep = difference_report(op, sts)
    rep.update(k=k, r=r, window=fock.window)
    return rep


def virasoro_defect(config: SugawaraConfig, k: int, m: int, states=None, R=None) -> dict:
    """Central value of ``[L*_k, L*_m] - [e_k, e_m]^*`` next to the closed-form prediction."""
    Lk, Lm = normalized_L(config, k), normalized_L(config, m)
    br = structure_constants(SPHERE, "LL", k, m)
    rhs = LinComb([(c, normalized_L(config, j)) for j, c in br.items()])
    op = commutator(Lk, Lm) - rhs
    sts = _window_states(config, [Lk, Lm], states)
    value = scalar_defect(op, sts, config.fock)
    dim_g = sum(len(p.pairs) for p in config.parts)
    p = config.parts[0]
    prefactor = p.level * dim_g / p.shifted_level
    vc = vector_cocycle(SPHERE.vector(k), SPHERE.vector(m), R)
    return {"k": k, "m": m, "value": value, "vector_cocycle": vc,
            "prefactor": prefactor, "formula_value": prefactor * vc,
            "ratio": (value / (prefactor * vc)) if vc else None}
