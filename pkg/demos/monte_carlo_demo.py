"""Simulated checks of the exact engine for the jump model (about a minute on one core).

Run: python3 demos/monte_carlo_demo.py [replicas]
"""

import math
import sys

from glsemigroup import apply_semigroup, model_j
from glsemigroup.montecarlo import (
    HittingLaplace,
    KilledSemigroup,
    PathConfig,
    estimate,
    hitting_intertwining_check,
    lamperti_path,
    laguerre_path,
    simulate_levy,
)
from glsemigroup.polys import Poly, ThetaShiftedPoly

replicas = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
model = model_j()
cfg = PathConfig(dt=2e-3, eps_absorb=1e-10, replicas=replicas, seed=1)

levy = simulate_levy(model, PathConfig(dt=1e-3, horizon=30.0, seed=1))
xbar = lamperti_path(levy, 1.0, eps_absorb=1e-8)
x = laguerre_path(xbar)
print(f"one path: absorbed={x.absorbed}, hitting time {x.absorption_time:.4f}")

for coeffs in ((1,), (0, 1)):
    f = ThetaShiftedPoly(Poly(coeffs), model.theta)
    for t in (0.5, 1.0):
        est = estimate(model, KilledSemigroup(f, 1.0, t), cfg)
        exact = float(apply_semigroup(model, f, t, "P_dag")(1.0))
        print(f"E[x^theta p(X_{t}); t < T0], p={coeffs}: {est.value:.5f} +- {est.stderr:.5f} (exact {exact:.5f})")

for q in (0.5, 1.0, 2.0):
    est = estimate(model, HittingLaplace(q, 1.0), cfg)
    print(f"E[exp(-{q} T0)] = {est.value:.5f} +- {est.stderr:.5f}")

check = hitting_intertwining_check(model, 1.0, 1.0, cfg, PathConfig(dt=1e-3, replicas=replicas, seed=2))
print(f"\nhitting intertwining: lhs {check.lhs:.5f} +- {check.lhs_se:.5f}, "
      f"rhs {check.rhs:.5f} +- {check.rhs_se:.5f}, z = {check.z:+.2f} (exact rhs {check.rhs_exact:.5f})")
print(f"e^-theta = {math.exp(-model.theta):.6f}")
