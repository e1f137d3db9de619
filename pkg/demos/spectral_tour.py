"""Eigenpolynomials, semigroup action and the speed of convergence for a jump model.

Run: python3 demos/spectral_tour.py
"""

import math

from glsemigroup import (
    apply_semigroup,
    convergence_check,
    eigenpoly,
    model_j,
    norm_m,
    stationary_mean,
    to_eigenbasis,
)
from glsemigroup.polys import Poly

model = model_j()
print(f"theta = {model.theta:.6f}, frakb = {model.frakb:.6f}")

for n in range(4):
    print(f"P_{n}:", eigenpoly(model, n))

f = Poly((1.0, -2.0, 0.5, 0.1))
print("\nf =", f)
print("eigen coefficients:", [float(c) for c in to_eigenbasis(model, f)])
print(f"stationary mean {float(stationary_mean(model, f)):.6f}, L2(m) norm {float(norm_m(model, f)):.6f}")

print("\n  t    ||P_t f - mf||    bound        ratio")
for t in (0.25, 0.5, 1.0, 2.0, 4.0):
    rep = convergence_check(model, f, t)
    print(f"{t:5.2f}  {rep.lhs:.6e}  {rep.rhs:.6e}  {rep.ratio:.4f}")

# the slowest mode decays like e^{-t}: the ratio settles at 1 / sqrt((b+1)/(1-theta))
print(f"\nlimit ratio 1/C = {1 / math.sqrt((model.frakb + 1) / (1 - model.theta)):.4f}")
g = apply_semigroup(model, f, 1.0, "P")
print("P_1 f =", g)
