"""The Markov multiplier Lambda f(x) = E[f(x I_phi)] and the intertwining checks.

On monomials Lambda x^s = M_I(s+1) x^s with M_I(s+1) = Gamma(s+1)/W_phi(s+1),
so Lambda acts diagonally on polynomials and on x^theta * polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bernstein import PsiModel, log_wphi
from .distributions import gauss_rule_iphi
from .errors import DomainError, IdentityViolation
from .polys import MP, Poly, ThetaShiftedPoly
from .spectral import apply_semigroup, c_n, eigenpoly, laguerre, spectral_model

__all__ = [
    "lambda_multiplier",
    "lambda_poly",
    "lambda_fn",
    "lambda_of_laguerre",
    "verify_intertwining",
    "IntertwiningResult",
    "adjoint_pairing",
]


def lambda_multiplier(model: PsiModel, k: int, shifted: bool = False):
    """M_I(k+1), or M_I(k+1+theta) up to the common factor 1/W_phi(1+theta) when shifted.

    Both use the same extended-precision psi values as the spectral engines:
    phi(i) = psi(i)/(i - theta) and phi(i + theta) = psi(i + theta)/i.
    """
    sm = spectral_model(model)
    theta = MP.mpf(sm.theta)
    out = MP.one
    if not shifted:
        for i in range(1, k + 1):
            out *= (i - theta) * i / sm.P.rate(i)
        return out
    out = MP.gamma(1 + theta)
    for i in range(1, k + 1):
        out *= (i + theta) * i / sm.P_up.rate(i)
    return out


def _w_one_plus_theta(model: PsiModel):
    return MP.exp(MP.mpf(float(log_wphi(model, 1.0 + model.require_theta()))))


def lambda_poly(model: PsiModel, f):
    """Apply Lambda coefficientwise to a Poly or a ThetaShiftedPoly."""
    if isinstance(f, Poly):
        return Poly(tuple(a * lambda_multiplier(model, k) for k, a in enumerate(f.coeffs)))
    if isinstance(f, ThetaShiftedPoly):
        w = _w_one_plus_theta(model)
        return ThetaShiftedPoly(
            Poly(tuple(a * lambda_multiplier(model, k, shifted=True) / w for k, a in enumerate(f.poly.coeffs))),
            f.theta,
        )
    raise DomainError("lambda_poly acts on Poly or ThetaShiftedPoly")


def lambda_fn(model: PsiModel, f, x: float, k: int = 6) -> float:
    """E[f(x I_phi)] by the k-point moment Gauss rule."""
    if x < 0:
        raise DomainError("x must be >= 0")
    return gauss_rule_iphi(model, k)(f, x)


def lambda_of_laguerre(model: PsiModel, n: int, tol: float = 1e-10) -> Poly:
    """Lambda L_n, checked against P_n / c_n(-theta)."""
    theta = model.require_theta()
    image = lambda_poly(model, laguerre(model, n, "L"))
    target = eigenpoly(model, n, "P").scale(1 / c_n(-theta, n))
    scale = max(abs(c) for c in target.coeffs)
    dev = max(abs(a - b) for a, b in zip(image.coeffs, target.coeffs)) / scale
    if dev > tol:
        raise IdentityViolation(f"Lambda L_{n} differs from P_{n}/c_{n}(-theta) by {MP.nstr(dev, 3)}")
    return image


def _max_relative_deviation(a, b) -> float:
    ca = a.poly.coeffs if isinstance(a, ThetaShiftedPoly) else a.coeffs
    cb = b.poly.coeffs if isinstance(b, ThetaShiftedPoly) else b.coeffs
    n = max(len(ca), len(cb))
    ca = tuple(ca) + (MP.zero,) * (n - len(ca))
    cb = tuple(cb) + (MP.zero,) * (n - len(cb))
    scale = max(max(abs(c) for c in cb), MP.mpf(10) ** (-300))
    return float(max(abs(x - y) for x, y in zip(ca, cb)) / scale)


@dataclass(frozen=True)
class IntertwiningResult:
    left: object
    right: object
    deviation: float


def verify_intertwining(model: PsiModel, f, t: float, killed: bool = False, detail: bool = False):
    """Max relative coefficient deviation between P_t Lambda f and Lambda Q_t f.

    With ``killed`` the killed semigroups act on x^theta * polynomial.
    """
    if killed:
        if not isinstance(f, ThetaShiftedPoly):
            raise DomainError("the killed identity acts on ThetaShiftedPoly inputs")
        left = apply_semigroup(model, lambda_poly(model, f), t, "P_dag")
        right = lambda_poly(model, apply_semigroup(model, f, t, "Q_dag"))
    else:
        if not isinstance(f, Poly):
            raise DomainError("the reflected identity acts on Poly inputs")
        left = apply_semigroup(model, lambda_poly(model, f), t, "P")
        right = lambda_poly(model, apply_semigroup(model, f, t, "Q"))
    dev = _max_relative_deviation(left, right)
    if detail:
        return IntertwiningResult(left, right, dev)
    return dev


def adjoint_pairing(model: PsiModel, g: Poly, n: int):
    """Both sides of <Lambda g, m_n>_m = <g, L_n>_Gamma.

    The right side integrates g * L_n against the Gamma(1-theta) law through
    its moments Gamma(j+1-theta)/Gamma(1-theta).
    """
    sm = spectral_model(model)
    lg = lambda_poly(model, g)
    left = MP.fsum(a * sm.P.pairing(k, n) for k, a in enumerate(lg.coeffs))
    ln = laguerre(model, n, "L")
    theta = MP.mpf(sm.theta)
    g0 = MP.gamma(1 - theta)
    right = MP.fsum(
        a * b * MP.gamma(j + k + 1 - theta) / g0 for j, a in enumerate(g.coeffs) for k, b in enumerate(ln.coeffs)
    )
    return left, right
