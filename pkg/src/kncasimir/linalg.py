"""Exact sparse linear algebra over the rationals.

Vectors are dicts ``key -> Fraction`` with no zero entries.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Hashable, Iterable, Optional


def axpy(y: dict, a, x: dict) -> dict:
    """``y + a x`` as a new dict."""
    out = dict(y)
    for k, v in x.items():
        nv = out.get(k, 0) + a * v
        if nv:
            out[k] = nv
        else:
            out.pop(k, None)
    return out


class Echelon:
    """Incremental row echelon form of a span of sparse vectors.

    Pivots are the smallest key (in the given ``order``) of each stored row,
    and every stored row is reduced against earlier pivots.
    """

    def __init__(self, order=None):
        self._order = order or (lambda k: k)
        self.rows = {}  # pivot -> row normalized with pivot coefficient 1

    def __len__(self):
        return len(self.rows)

    @property
    def rank(self) -> int:
        return len(self.rows)

    def _pivot(self, v: dict):
        return min(v, key=self._order)

    def reduce(self, v: dict) -> dict:
        v = {k: c for k, c in v.items() if c}
        while v:
            changed = False
            for k in sorted(v, key=self._order):
                row = self.rows.get(k)
                if row is not None:
                    v = axpy(v, -v[k], row)
                    changed = True
                    break
            if not changed:
                break
        return v

    def add(self, v: dict) -> bool:
        """Insert ``v``; return True when it enlarged the span."""
        r = self.reduce(v)
        if not r:
            return False
        p = self._pivot(r)
        inv = 1 / Fraction(r[p])
        r = {k: c * inv for k, c in r.items()}
        self.rows[p] = r
        return True

    def contains(self, v: dict) -> bool:
        return not self.reduce(v)


def solve(rows: list, rhs: list, unknowns: list):
    """Solve ``rows @ x = rhs`` exactly.

    ``rows`` is a list of dicts ``unknown -> coefficient``.  Returns
    ``(solution, residual_rows)`` where ``solution`` gives the particular
    solution with free unknowns set to zero and ``residual_rows`` lists indices
    of inconsistent equations; also returns the list of free unknowns.
    """
    n = len(unknowns)
    pos = {u: i for i, u in enumerate(unknowns)}
    aug = []
    for r, b in zip(rows, rhs):
        row = [Fraction(0)] * (n + 1)
        for u, c in r.items():
            row[pos[u]] = Fraction(c)
        row[n] = Fraction(b)
        aug.append(row)
    piv_cols = []
    rix = 0
    for col in range(n):
        p = next((i for i in range(rix, len(aug)) if aug[i][col] != 0), None)
        if p is None:
            continue
        aug[rix], aug[p] = aug[p], aug[rix]
        inv = 1 / aug[rix][col]
        aug[rix] = [x * inv for x in aug[rix]]
        for i in range(len(aug)):
            if i != rix and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[rix])]
        piv_cols.append(col)
        rix += 1
    inconsistent = [i for i in range(rix, len(aug)) if aug[i][n] != 0]
    sol = {u: Fraction(0) for u in unknowns}
    for i, col in enumerate(piv_cols):
        sol[unknowns[col]] = aug[i][n]
    free = [unknowns[c] for c in range(n) if c not in piv_cols]
    return sol, inconsistent, free
