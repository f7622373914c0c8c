"""Measure the mixed cocycle on a twisted fermion space and solve for the casimir.

Run: python demos/casimir_from_fock.py
"""

from fractions import Fraction

from kncasimir import casimir as cas
from kncasimir.fock import FockConfig, identity
from kncasimir.sugawara import sugawara_config

ORDER = 6

fock = FockConfig(l=1, charge=-1, twist=Fraction(1, 3), window=2 * ORDER + 2)
print("genericity:", fock.genericity())

table = cas.gamma_table_measured(fock, ORDER)
print("table triangular:", table.is_triangular, "degenerate pivots:", table.degenerate)
for k in range(-3, 4):
    row = "  ".join(f"{str(table.get(k, m)):>6}" for m in range(-3, 4))
    print(f"  k={k:+d}  {row}")

tri = cas.casimir_triangular(table, ORDER)
fit = cas.extract_aT(table, 2)
ode = cas.casimir_ode(fit["a"], fit["T"], ORDER)
print("fitted a =", fit["a"], " T =", fit["T"].to_text(), " ord T =", fit["ord_T"])
print("triangular field:", {m: str(c) for m, c in tri.field().items()}, " ode field:", {m: str(c) for m, c in ode.field().items()})
print("routes agree:", cas.routes_agree(tri, ode, ORDER))

# the same field with a non-trivial connection
tau = {-1: Fraction(-2, 3), 0: Fraction(1), 1: Fraction(2)}
sol = cas.casimir_ode(Fraction(1, 2), tau, ORDER)
print("a=1/2, T=-2/3 z^-1 + 1 + 2z:", {m: str(c) for m, c in sol.field().items()})

cfg = sugawara_config("gl1", fock.with_window(8))
sweep = cas.commutator_sweep(tri.field(), cfg, list(range(-5, 6)), [identity(1)], order=ORDER)
print("commutes with every current A_k, |k| <= 5:", sweep["ok"], f"({sweep['tested']} states)")
