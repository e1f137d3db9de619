"""Inverse local time at 0: exponents, Krein atoms and excursion lengths.

Run: python3 demos/local_time_demo.py
"""

import numpy as np

from glsemigroup import (
    excursion_survival,
    krein_atoms,
    krein_reconstruction,
    lk_parts,
    model_c,
    model_j,
    phi_subordinator,
    revuz_constants,
    subordinator_exponent,
)

theta = 0.5
q = np.array([0.1, 0.5, 1.0, 2.0, 10.0])
print("q            ", q)
print("Phi_X model-c", phi_subordinator("X_laguerre", model_c(), q))
print("Phi_X model-j", phi_subordinator("X_laguerre", model_j(), q))
print("Phi_Xbar     ", phi_subordinator("Xbar_selfsimilar", None, q, theta=theta))

print("\nRevuz masses (model-j):", revuz_constants(model_j()))
print("killing, drift of Phi_X:", lk_parts(subordinator_exponent("X_laguerre", theta=theta)))

print("\nfirst Krein atoms (location, weight):")
for loc, w in krein_atoms(theta, 4):
    print(f"  {loc:4.1f}  {w:.6f}")
for v in (0.1, 1.0, 10.0):
    rec = krein_reconstruction(theta, v)
    exact = float(phi_subordinator("X_laguerre", None, v, theta=theta))
    print(f"q = {v:5.1f}: reconstruction {rec:.6f}, exact {exact:.6f}")

print("\nP(excursion > b | excursion > 1):")
for b in (1.0, 2.0, 4.0, 8.0):
    lag = excursion_survival("X_laguerre", 1.0, b, theta)
    ss = excursion_survival("Xbar_selfsimilar", 1.0, b, theta)
    print(f"  b = {b:3.0f}: Laguerre {lag:.6f}, self-similar {ss:.6f}")
