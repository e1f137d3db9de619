"""The Markov multiplier Lambda maps the Gamma-stationary semigroup onto the jump model.

Run: python3 demos/intertwining_demo.py
"""

import numpy as np

from glsemigroup import (
    gauss_rule_iphi,
    lambda_fn,
    lambda_of_laguerre,
    lambda_poly,
    model_j,
    moments,
    verify_intertwining,
)
from glsemigroup.polys import Poly, ThetaShiftedPoly

model = model_j()

print("moments of I_phi:", [round(moments(model, "I_phi", n), 6) for n in range(6)])
rule = gauss_rule_iphi(model, 6)
print("6-point rule nodes  ", np.round(rule.nodes, 6))
print("6-point rule weights", np.round(rule.weights, 6))

f = Poly((0.2, -1.0, 0.3))
print("\nLambda f =", lambda_poly(model, f))
print("quadrature route at x = 2:", lambda_fn(model, f, 2.0), " exact:", float(lambda_poly(model, f)(2.0)))

for n in range(4):
    print(f"Lambda L_{n} =", lambda_of_laguerre(model, n))

rng = np.random.default_rng(1)
print("\n  t    reflected     killed")
for t in (0.1, 1.0, 5.0):
    g = Poly(tuple(rng.uniform(-1, 1, 11)))
    a = verify_intertwining(model, g, t)
    b = verify_intertwining(model, ThetaShiftedPoly(g, model.theta), t, killed=True)
    print(f"{t:4.1f}  {a:.2e}  {b:.2e}")
