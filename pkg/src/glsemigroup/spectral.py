"""Polynomial calculus for the generalized Laguerre semigroups.

Everything is driven by one moment sequence.  For an exponent with values
r(1), r(2), ... at the integers, put M(k+1) = prod_{i<=k} r(i)/i.  Then

    eigenpolynomial   P_n(x) = sum_k (-1)^k C(n,k) x^k / M(k+1)
    co-eigen pairing  <x^k, m_n> = (-1)^n C(k,n) M(k+1)

and P_t P_n = exp(-n t) P_n.  The engine for psi gives P, the engine for
psi(. + theta) gives the killed semigroup (through x^theta), and the
classical exponent u(u - theta) gives Q.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache

from .bernstein import PsiModel, classical_model
from .errors import DomainError, NegativeNormResidual
from .polys import MP, Poly, ThetaShiftedPoly

__all__ = [
    "LaguerreEngine",
    "SpectralModel",
    "spectral_model",
    "c_n",
    "laguerre",
    "eigenpoly",
    "pairing",
    "to_eigenbasis",
    "apply_semigroup",
    "stationary_mean",
    "inner_m",
    "norm_m",
    "bessel_partial",
    "ConvergenceReport",
    "convergence_check",
]


class LaguerreEngine:
    """Eigenbasis, pairings and semigroup action for one exponent."""

    def __init__(self, model: PsiModel, shift: float = 0.0):
        self.model = model
        self.shift = shift
        self._rates = [None]
        self._moments = [MP.one]
        self._lock = threading.Lock()

    def rate(self, k: int):
        """r(k) = psi(k + shift) as an extended-precision number."""
        self._extend(k)
        return self._rates[k]

    def moment(self, k: int):
        """M(k+1) = prod_{i<=k} r(i) / i."""
        self._extend(k)
        return self._moments[k]

    def _extend(self, k):
        if k < len(self._moments):
            return
        with self._lock:
            while len(self._moments) <= k:
                i = len(self._moments)
                r = MP.mpf(float(self.model.psi(float(i) + self.shift)))
                self._rates.append(r)
                self._moments.append(self._moments[-1] * r / i)

    def eigen_coeff(self, n: int, k: int):
        if k > n:
            return MP.zero
        return (-1) ** k * MP.binomial(n, k) / self.moment(k)

    def eigenpoly(self, n: int) -> Poly:
        return Poly(tuple(self.eigen_coeff(n, k) for k in range(n + 1)))

    def pairing(self, k: int, n: int):
        if n > k:
            return MP.zero
        return (-1) ** n * MP.binomial(k, n) * self.moment(k)

    def to_eigenbasis(self, f: Poly, route: str = "pairing") -> list:
        a = f.coeffs
        deg = f.degree
        if route == "pairing":
            return [MP.fsum(a[k] * self.pairing(k, n) for k in range(n, deg + 1)) for n in range(deg + 1)]
        if route == "triangular":
            c = [MP.zero] * (deg + 1)
            for n in range(deg, -1, -1):
                acc = a[n] - MP.fsum(c[m] * self.eigen_coeff(m, n) for m in range(n + 1, deg + 1))
                c[n] = acc / self.eigen_coeff(n, n)
            return c
        raise DomainError(f"route must be 'pairing' or 'triangular', got {route!r}")

    def from_eigenbasis(self, c) -> Poly:
        deg = len(c) - 1
        return Poly(tuple(MP.fsum(c[n] * self.eigen_coeff(n, k) for n in range(k, deg + 1)) for k in range(deg + 1)))

    def apply(self, f: Poly, t: float) -> Poly:
        if t < 0:
            raise DomainError("semigroup time must be >= 0")
        c = self.to_eigenbasis(f)
        decay = MP.exp(-MP.mpf(t))
        return self.from_eigenbasis([cn * decay**n for n, cn in enumerate(c)])

    def inner(self, f: Poly, g: Poly):
        """int f g dm through the moments M(j+k+1)."""
        return MP.fsum(
            fa * gb * self.moment(j + k) for j, fa in enumerate(f.coeffs) for k, gb in enumerate(g.coeffs)
        )

    def mean(self, f: Poly):
        return MP.fsum(a * self.moment(k) for k, a in enumerate(f.coeffs))


@lru_cache(maxsize=None)
def _engine(quad, theta, shift) -> LaguerreEngine:
    from .bernstein import build_model

    return LaguerreEngine(build_model(quad, theta=theta), shift)


def _engine_for(model: PsiModel, up: bool) -> LaguerreEngine:
    theta = model.require_theta()
    return _engine(model.quad, theta, theta if up else 0.0)


@dataclass(frozen=True)
class SpectralModel:
    """The four engines attached to a model: P, its killed version, and the classical pair."""

    model: PsiModel
    P: LaguerreEngine
    P_up: LaguerreEngine
    Q: LaguerreEngine
    Q_up: LaguerreEngine

    @property
    def theta(self) -> float:
        return self.model.theta


@lru_cache(maxsize=None)
def spectral_model(model: PsiModel) -> SpectralModel:
    theta = model.require_theta()
    classical = classical_model(theta)
    return SpectralModel(
        model=model,
        P=_engine_for(model, up=False),
        P_up=_engine_for(model, up=True),
        Q=_engine_for(classical, up=False),
        Q_up=_engine_for(classical, up=True),
    )


def c_n(u, n: int):
    """Gamma(1+u) n! / Gamma(n+1+u), u > -1."""
    u = MP.mpf(float(u))
    return MP.gamma(1 + u) * MP.factorial(n) / MP.gamma(n + 1 + u)


def laguerre(model: PsiModel, n: int, variant: str = "L"):
    """Laguerre polynomial L_n (Poly) or its x^theta companion L_dag_n (ThetaShiftedPoly)."""
    theta = MP.mpf(model.require_theta())
    if variant == "L":
        top = MP.gamma(n + 1 - theta)
        return Poly(
            tuple((-1) ** k * top / (MP.gamma(k + 1 - theta) * MP.factorial(n - k) * MP.factorial(k)) for k in range(n + 1))
        )
    if variant == "L_dag":
        top = MP.gamma(n + 1 + theta)
        q = Poly(
            tuple((-1) ** k * top / (MP.gamma(k + 1 + theta) * MP.factorial(n - k) * MP.factorial(k)) for k in range(n + 1))
        )
        return ThetaShiftedPoly(q, float(theta))
    raise DomainError(f"variant must be 'L' or 'L_dag', got {variant!r}")


def eigenpoly(model: PsiModel, n: int, variant: str = "P"):
    sm = spectral_model(model)
    if variant == "P":
        return sm.P.eigenpoly(n)
    if variant == "P_dag":
        return ThetaShiftedPoly(sm.P_up.eigenpoly(n), sm.theta)
    raise DomainError(f"variant must be 'P' or 'P_dag', got {variant!r}")


def pairing(model: PsiModel, k: int, n: int, variant: str = "m"):
    """<x^k, m_n> (variant 'm') or <x^theta x^k, m_dag_n> (variant 'm_dag')."""
    sm = spectral_model(model)
    if variant == "m":
        return sm.P.pairing(k, n)
    if variant == "m_dag":
        return sm.P_up.pairing(k, n)
    raise DomainError(f"variant must be 'm' or 'm_dag', got {variant!r}")


def to_eigenbasis(model: PsiModel, f, variant: str = "P", route: str = "pairing") -> list:
    sm = spectral_model(model)
    if variant == "P":
        return sm.P.to_eigenbasis(f, route)
    if variant == "P_dag":
        q = f.poly if isinstance(f, ThetaShiftedPoly) else f
        return sm.P_up.to_eigenbasis(q, route)
    raise DomainError(f"variant must be 'P' or 'P_dag', got {variant!r}")


def apply_semigroup(model: PsiModel, f, t: float, which: str = "P"):
    """P_t, Q_t on polynomials; their killed versions on x^theta * polynomial."""
    sm = spectral_model(model)
    if which in ("P", "Q"):
        if not isinstance(f, Poly):
            raise DomainError(f"{which} acts on Poly inputs")
        return (sm.P if which == "P" else sm.Q).apply(f, t)
    if which in ("P_dag", "Q_dag"):
        if not isinstance(f, ThetaShiftedPoly):
            raise DomainError(f"{which} acts on ThetaShiftedPoly inputs")
        engine = sm.P_up if which == "P_dag" else sm.Q_up
        damp = MP.exp(-MP.mpf(sm.theta) * MP.mpf(t))
        return ThetaShiftedPoly(engine.apply(f.poly, t).scale(damp), sm.theta)
    raise DomainError(f"which must be one of P, P_dag, Q, Q_dag; got {which!r}")


def stationary_mean(model: PsiModel, f: Poly):
    return spectral_model(model).P.mean(f)


def inner_m(model: PsiModel, f: Poly, g: Poly):
    return spectral_model(model).P.inner(f, g)


def norm_m(model: PsiModel, f: Poly):
    sq = inner_m(model, f, f)
    if sq < -1e-12:
        raise NegativeNormResidual(f"squared norm came out as {MP.nstr(sq, 5)}")
    return MP.sqrt(max(sq, MP.zero))


def bessel_partial(model: PsiModel, f: Poly, N: int, which: str = "eigen"):
    """Partial Bessel sum of f against the normalized eigen or co-eigen sequence."""
    sm = spectral_model(model)
    theta = sm.theta
    total = MP.zero
    if which == "eigen":
        for n in range(N + 1):
            total += sm.P.inner(f, sm.P.eigenpoly(n)) ** 2 / c_n(-theta, n)
        return total
    if which == "coeigen":
        b = model.frakb
        if b is None:
            raise DomainError("the co-eigen bound needs frakb (sigma2 > 0 and a finite double tail)")
        for n in range(N + 1):
            pair = MP.fsum(a * sm.P.pairing(k, n) for k, a in enumerate(f.coeffs))
            total += c_n(b, n) * pair**2
        return total
    raise DomainError(f"which must be 'eigen' or 'coeigen', got {which!r}")


@dataclass(frozen=True)
class ConvergenceReport:
    lhs: float
    rhs: float
    constant: float
    violated: bool
    applicable: bool

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs else 0.0


def convergence_check(model: PsiModel, f: Poly, t: float) -> ConvergenceReport:
    """Compare ||P_t f - mf|| with sqrt((b+1)/(1-theta)) e^{-t} ||f - mf||.

    ``applicable`` is False when frakb < 0; the numbers are still reported.
    A violation must exceed the working-precision floor eps * ||f||, below
    which the centring f - mf carries no information.
    """
    b = model.frakb
    if b is None:
        raise DomainError("the convergence bound needs frakb (sigma2 > 0 and a finite double tail)")
    theta = model.require_theta()
    mean = stationary_mean(model, f)
    centred = f - Poly((mean,))
    lhs = norm_m(model, apply_semigroup(model, centred, t, "P"))
    const = MP.sqrt((MP.mpf(b) + 1) / (1 - MP.mpf(theta)))
    rhs = const * MP.exp(-MP.mpf(t)) * norm_m(model, centred)
    floor = 1e3 * MP.eps * norm_m(model, f)
    return ConvergenceReport(
        lhs=float(lhs),
        rhs=float(rhs),
        constant=float(const),
        violated=bool(lhs > rhs * (1 + MP.mpf(1e-10)) + floor),
        applicable=b >= 0,
    )
