"""Krichever-Novikov functions on a torus with points at 0 and w, and their duality."""

from itertools import product

from kncasimir.jets import MINUS, PLUS, leading_order, residue
from kncasimir.surface import SurfaceSpec, make_surface

torus = make_surface(SurfaceSpec(genus=1, precision_bits=192))
w1, w3 = torus.periods()
print("half periods:", w1, w3)

for m in range(-2, 4):
    A = torus.function(m)
    head = [f"{complex(A.plus.coef(e)):.4g}" for e in range(m, m + 3)]
    print(f"A_{m:+d}: ord+ {leading_order(A, PLUS, torus.tol):+d}  ord- {leading_order(A, MINUS, torus.tol):+d}  "
          f"leading coefficients {head}")

worst = max(abs(residue(torus.function(m) * torus.oneform(n)) - (m == n))
            for m, n in product(range(-4, 5), repeat=2))
print(f"max |res(A_m w^n) - delta| over |m|,|n| <= 4: {float(worst):.2e}")
