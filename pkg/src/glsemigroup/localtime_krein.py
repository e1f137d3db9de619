"""Inverse local time at 0: Laplace exponents, normalizations, Krein atoms, excursions.

For the Laguerre-type process with index theta the inverse local time has

    Phi_X(q) = theta Gamma(q+theta) / (Gamma(1+theta) Gamma(q)),

whose Levy density is u(r) = sum_n w_n exp(-(n+theta) r) with the weights
returned by :func:`krein_atoms`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import gammaln, loggamma, poch

from .bernstein import PsiModel, log_wphi
from .errors import DomainError

__all__ = [
    "TAGS",
    "SubordinatorExponent",
    "subordinator_exponent",
    "phi_subordinator",
    "revuz_constants",
    "lk_parts",
    "krein_atoms",
    "krein_reconstruction",
    "excursion_survival",
    "last_exit_laplace",
    "PickReport",
    "pick_bernstein_check",
]

TAGS = ("X_laguerre", "Xbar_selfsimilar", "tilde_X", "tilde_Y")


@dataclass(frozen=True)
class SubordinatorExponent:
    """A Bernstein function q -> Phi(q) together with what it describes."""

    tag: str
    theta: float
    func: Callable
    model: PsiModel | None = None

    def __call__(self, q):
        return self.func(q)


def _gamma_ratio(q, theta):
    # Gamma(q + theta) / Gamma(q), valid for complex q off the poles
    q = np.asarray(q)
    if np.iscomplexobj(q):
        return np.exp(loggamma(q + theta) - loggamma(q))
    return poch(q, theta)


def subordinator_exponent(tag: str, theta: float | None = None, model: PsiModel | None = None) -> SubordinatorExponent:
    if theta is None:
        if model is None:
            raise DomainError("supply theta or a model")
        theta = model.require_theta()
    if not 0 < theta < 1:
        raise DomainError("theta must lie in (0, 1)")
    g1m = math.gamma(1 - theta)
    g1p = math.gamma(1 + theta)
    if tag == "X_laguerre":
        func = lambda q: theta * _gamma_ratio(q, theta) / g1p  # noqa: E731
    elif tag == "Xbar_selfsimilar":
        const = g1m / math.gamma(theta) * 2 ** (1 - theta)
        func = lambda q: const * np.asarray(q) ** theta  # noqa: E731
    elif tag == "tilde_X":
        if model is None:
            raise DomainError("tilde_X needs a model for W_phi(1+theta)")
        w = math.exp(float(np.real(log_wphi(model, 1 + theta))))
        func = lambda q: g1m * _gamma_ratio(q, theta) / w  # noqa: E731
    elif tag == "tilde_Y":
        func = lambda q: g1m / g1p * _gamma_ratio(q, theta)  # noqa: E731
    else:
        raise DomainError(f"unknown tag {tag!r}; choose from {TAGS}")
    return SubordinatorExponent(tag=tag, theta=theta, func=func, model=model)


def phi_subordinator(tag: str, model: PsiModel | None, q, theta: float | None = None):
    if np.any(np.real(q) <= 0) and not np.iscomplexobj(q):
        raise DomainError("q must be > 0")
    if model is not None and theta is None:
        theta = model.require_theta()
    return subordinator_exponent(tag, theta=theta, model=model)(q)


def revuz_constants(model: PsiModel, q_grid=(0.1, 1.0, 10.0), tol: float = 1e-8):
    """Total Revuz masses for the two local-time normalizations.

    The normalized exponents are the tilde exponents multiplied by these
    masses; that relation is verified on ``q_grid`` before returning.
    """
    theta = model.require_theta()
    w = math.exp(float(np.real(log_wphi(model, 1 + theta))))
    c_frak = theta * w / (math.gamma(1 - theta) * math.gamma(1 + theta))
    c_m = theta / math.gamma(1 - theta)
    q = np.asarray(q_grid, dtype=float)
    checks = [
        (phi_subordinator("X_laguerre", model, q), c_frak * phi_subordinator("tilde_X", model, q)),
        (phi_subordinator("X_laguerre", model, q), c_m * phi_subordinator("tilde_Y", model, q)),
    ]
    for want, got in checks:
        err = np.max(np.abs(got / want - 1))
        if err > tol:
            raise AssertionError(f"Revuz normalization off by {err:.2e}")
    return c_frak, c_m


def _richardson_limit(values):
    """Limit of a sequence with geometric error decay, by repeated Aitken steps."""
    s = list(values)
    while len(s) >= 3:
        nxt = []
        for a, b, c in zip(s, s[1:], s[2:]):
            den = (c - b) - (b - a)
            nxt.append(c if abs(den) < 1e-300 else c - (c - b) ** 2 / den)
        if len(nxt) < 3:
            return nxt[-1]
        s = nxt
    return s[-1]


def lk_parts(exponent) -> tuple:
    """(killing, drift): limits of Phi(q) as q -> 0 and of Phi(q)/q as q -> inf."""
    small = np.array([4.0 ** (-k) for k in range(4, 14)])
    large = np.array([4.0**k for k in range(4, 14)])
    delta = _richardson_limit([float(exponent(q)) for q in small])
    gamma = _richardson_limit([float(exponent(q)) / q for q in large])
    return float(delta), float(gamma)


def krein_atoms(theta: float, N: int) -> list:
    """(n + theta, w_n) for n = 0..N, the atoms of the Krein measure of Phi_X."""
    if not 0 < theta < 1:
        raise DomainError("theta must lie in (0, 1)")
    n = np.arange(N + 1, dtype=float)
    log_w = (
        np.log(n + theta)
        + math.log(theta * math.sin(math.pi * theta) / math.pi)
        + gammaln(n + theta)
        - gammaln(n + 1)
        - gammaln(1 + theta)
    )
    return list(zip((n + theta).tolist(), np.exp(log_w).tolist()))


def _residue(x, theta):
    # w(x) / (x + theta) extended to real x, i.e. the pole residue of Phi_X(q)/q
    return theta * math.sin(math.pi * theta) / math.pi * np.exp(gammaln(x + theta) - gammaln(x + 1) - gammaln(1 + theta))


def krein_reconstruction(theta: float, q, N: int = 10_000) -> float:
    """q * sum_{n<=N} w_n / ((n+theta)(q+n+theta)) plus an integral estimate of the tail."""
    atoms = krein_atoms(theta, N)
    loc = np.array([a for a, _ in atoms])
    w = np.array([b for _, b in atoms])
    head = float(np.sum(w / (loc * (q + loc))))
    tail, _ = integrate.quad(lambda x: _residue(x, theta) / (q + x + theta), N + 0.5, np.inf, limit=200)
    return q * (head + tail)


def _mu_bar(theta: float, c: float, tol: float = 1e-8) -> float:
    # int_c^inf u(r) dr = sum_n w_n e^{-(n+theta)c}/(n+theta); stop once the
    # geometric tail bound of the remaining terms drops below tol * partial sum
    total = 0.0
    n = 0
    chunk = 256
    while True:
        atoms = krein_atoms(theta, n + chunk - 1)[n:]
        loc = np.array([a for a, _ in atoms])
        w = np.array([b for _, b in atoms])
        terms = w * np.exp(-loc * c) / loc
        total += float(np.sum(terms))
        last = terms[-1]
        bound = last * math.exp(-c) / (1 - math.exp(-c))
        if bound < tol * total:
            return total
        n += chunk


def excursion_survival(tag: str, a: float, b: float, theta: float) -> float:
    """P(excursion length > b | length > a) = mu_bar(b) / mu_bar(a)."""
    if a <= 0 or b < a:
        raise DomainError("need 0 < a <= b")
    if a == b:
        return 1.0
    if tag == "Xbar_selfsimilar":
        return (a / b) ** theta
    if tag == "X_laguerre":
        return _mu_bar(theta, b) / _mu_bar(theta, a)
    raise DomainError(f"excursion lengths are implemented for X_laguerre and Xbar_selfsimilar, not {tag!r}")


def last_exit_laplace(exponent, q: float) -> float:
    """E[exp(-q zeta)] = delta / Phi(q) for the last exit zeta from 0."""
    if q <= 0:
        raise DomainError("q must be > 0")
    delta, _ = lk_parts(exponent)
    if abs(delta) < 1e-9:
        delta = 0.0
    return delta / float(exponent(q))


@dataclass(frozen=True)
class PickReport:
    min_imag: float
    pick_ok: bool
    bernstein_ok: bool

    @property
    def passed(self) -> bool:
        return self.pick_ok and self.bernstein_ok


def pick_bernstein_check(exponent, grid=None, tol: float = 1e-10) -> PickReport:
    """Im Phi >= 0 on an upper half-plane grid; derivative signs alternate on (0, inf)."""
    if grid is None:
        re = np.linspace(-10, 10, 41)
        im = np.geomspace(1e-3, 10, 25)
        grid = (re[:, None] + 1j * im[None, :]).ravel()
    vals = np.asarray(exponent(np.asarray(grid, dtype=complex)))
    scale = np.maximum(1.0, np.abs(vals))
    min_imag = float(np.min(vals.imag / scale))
    u = np.geomspace(1e-2, 1e2, 60)
    h = 0.05 * u
    f = lambda x: np.asarray(exponent(x), dtype=float)  # noqa: E731
    samples = np.array([f(u + j * h) for j in range(-2, 3)])
    # central differences of orders 1..3; rounding floor ~ 1e-12 |f| / h^k
    diffs = [
        (samples[3] - samples[1]) / (2 * h),
        (samples[3] - 2 * samples[2] + samples[1]) / h**2,
        (samples[4] - 2 * samples[3] + 2 * samples[1] - samples[0]) / (2 * h**3),
    ]
    ok = bool(np.all(samples[2] > 0))
    for order, d in enumerate(diffs, start=1):
        floor = 1e-10 * np.abs(samples[2]) / h**order
        sign = (-1) ** (order + 1)
        ok &= bool(np.all(sign * d > -floor))
    return PickReport(min_imag=min_imag, pick_ok=min_imag >= -tol, bernstein_ok=ok)
