"""The two reference models and name-or-path model lookup."""

from __future__ import annotations

import math
from pathlib import Path

from .bernstein import Atom, LevyQuadruplet, PsiModel, build_model, classical_model, load_model
from .errors import DomainError

__all__ = ["model_c", "model_j", "BUILTIN_MODELS", "resolve_model"]


def model_c() -> PsiModel:
    """Brownian motion with drift: psi(u) = u^2 - u/2, so theta = 1/2 and I_phi = 1."""
    return classical_model(0.5)


def model_j() -> PsiModel:
    """sigma2 = 2, one jump of size ln 2 at rate 1, drift tuned so that psi(1/2) = 0."""
    beta = 1.5 - math.sqrt(2.0) - math.log(2.0)
    quad = LevyQuadruplet(beta=beta, sigma2=2.0, jumps=(Atom(math.log(2.0), 1.0),))
    return build_model(quad, theta=0.5, label="model-j")


BUILTIN_MODELS = {"model-c": model_c, "model-j": model_j}


def resolve_model(name: str) -> PsiModel:
    """A builtin name (model-c, model-j) or a path to a JSON model file."""
    key = name.lower().removesuffix(".json")
    if key in BUILTIN_MODELS and not Path(name).exists():
        return BUILTIN_MODELS[key]()
    if not Path(name).exists():
        raise DomainError(f"no model file {name!r} (builtins: {', '.join(BUILTIN_MODELS)})")
    return load_model(name)
