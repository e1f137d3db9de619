"""Moment tables, Mellin transforms and the invariant density.

Moment sequences M(n+1) = E[V^n] for the laws attached to a model:

    V_psi    prod_{k<=n} psi(k)/k
    I_phi    n! / W_phi(n+1)
    V_t1psi  prod_{k<=n} T1psi(k)/k
    m_up     prod_{k<=n} psi(k+theta) / n!
    Gamma    Gamma(n+1-theta) / Gamma(1-theta)

Values are stored as logarithms (all moments are positive).
"""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import gammaln, loggamma

from .bernstein import PsiModel, log_wphi
from .errors import DomainError, IllConditioned, SlowDecay

__all__ = [
    "MOMENT_KINDS",
    "MomentTable",
    "moment_table",
    "moments",
    "log_moment",
    "mellin_V",
    "log_mellin_V",
    "MellinDensity",
    "density_m",
    "density_integral",
    "GaussRule",
    "gauss_rule_iphi",
]

MOMENT_KINDS = ("V_psi", "I_phi", "V_t1psi", "m_up", "Gamma")


def _log_factor(model: PsiModel, kind: str, k: int) -> float:
    """log of M(k+1)/M(k) for k >= 1."""
    theta = model.require_theta()
    if kind == "V_psi":
        return math.log(model.psi(float(k)) / k)
    if kind == "I_phi":
        return math.log(k / model.phi(float(k)))
    if kind == "V_t1psi":
        t1 = k * model.psi(k + 1.0) / (k + 1.0)
        return math.log(t1 / k)
    if kind == "m_up":
        return math.log(model.psi(k + theta) / k)
    if kind == "Gamma":
        return math.log(k - theta)
    raise DomainError(f"unknown moment kind {kind!r}; choose from {MOMENT_KINDS}")


class MomentTable:
    """Append-only table of log M(n+1), extended under a lock."""

    def __init__(self, model: PsiModel, kind: str):
        if kind not in MOMENT_KINDS:
            raise DomainError(f"unknown moment kind {kind!r}; choose from {MOMENT_KINDS}")
        self.model = model
        self.kind = kind
        self._logs = [0.0]
        self._lock = threading.Lock()

    def log_value(self, n: int) -> float:
        if n < 0:
            raise DomainError("moment index must be >= 0")
        if n >= len(self._logs):
            with self._lock:
                while len(self._logs) <= n:
                    k = len(self._logs)
                    self._logs.append(self._logs[-1] + _log_factor(self.model, self.kind, k))
        return self._logs[n]

    def value(self, n: int) -> float:
        return math.exp(self.log_value(n))


@lru_cache(maxsize=None)
def moment_table(model: PsiModel, kind: str) -> MomentTable:
    return MomentTable(model, kind)


def log_moment(model: PsiModel, kind: str, n: int) -> float:
    if kind == "Gamma":
        theta = model.require_theta()
        return float(gammaln(n + 1 - theta) - gammaln(1 - theta))
    return moment_table(model, kind).log_value(n)


def moments(model: PsiModel, kind: str, n: int) -> float:
    """M(n+1) for the law named by ``kind``."""
    return math.exp(log_moment(model, kind, n))


def log_mellin_V(model: PsiModel, z):
    """log of Gamma(z - theta) W_phi(z) / (Gamma(1 - theta) Gamma(z)), Re z > theta."""
    theta = model.require_theta()
    z = np.asarray(z, dtype=complex)
    if np.any(z.real <= theta):
        raise DomainError("the Mellin transform of V_psi needs Re z > theta")
    if np.any(z.real - theta < 1e-3):
        warnings.warn("Re z is close to the pole at theta; expect loss of accuracy", RuntimeWarning, stacklevel=2)
    out = loggamma(z - theta) + log_wphi(model, z) - loggamma(1 - theta) - loggamma(z)
    return out[()] if out.ndim == 0 else out


def mellin_V(model: PsiModel, z):
    """E[V_psi^(z-1)] continued to the half-plane Re z > theta."""
    val = np.exp(log_mellin_V(model, z))
    if np.ndim(val) == 0 and np.imag(val) == 0:
        return complex(val)
    return val


# -- density by Mellin-Barnes inversion ---------------------------------------------


class MellinDensity:
    """Samples of M_V on the line Re z = c, reused for every density query.

    m(x) = (1/pi) Re sum_b' h x^(-c-ib) M(c+ib) over b >= 0 (trapezoid, half
    weight at b = 0), using M(c - ib) = conj M(c + ib).
    """

    step = 1.0 / 64.0
    block = 8.0
    b_max = 200.0
    tail_tol = 1e-8

    def __init__(self, model: PsiModel, c: float | None = None, cutoff: float = 1e-16):
        theta = model.require_theta()
        self.model = model
        self.c = theta + 0.5 if c is None else float(c)
        if not theta < self.c < theta + 1:
            raise DomainError("the inversion line must satisfy theta < c < theta + 1")
        values = []
        b_hi = 0.0
        peak = None
        while True:
            b = np.arange(b_hi, b_hi + self.block, self.step)
            chunk = np.exp(log_mellin_V(model, self.c + 1j * b))
            values.append(chunk)
            if peak is None:
                peak = abs(chunk[0])
            b_hi += self.block
            tail = float(np.max(np.abs(chunk[-int(self.block / self.step / 4):])))
            if tail < cutoff * peak:
                break
            if b_hi >= self.b_max:
                if tail > self.tail_tol:
                    raise SlowDecay(f"|M_V(c+ib)| = {tail:.3e} at b = {b_hi:g}; inversion unreliable")
                break
        self.b = np.arange(len(np.concatenate(values))) * self.step
        self.values = np.concatenate(values)
        self.tail = tail
        w = np.full(self.b.shape, self.step)
        w[0] *= 0.5
        self._weights = w * self.values

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x <= 0):
            raise DomainError("the density is evaluated on x > 0")
        out = np.empty(x.shape)
        for start in range(0, x.size, 256):
            lx = np.log(x[start:start + 256])
            phase = np.exp(-1j * np.outer(lx, self.b))
            s = phase @ self._weights
            out[start:start + 256] = np.exp(-self.c * lx) * s.real / math.pi
        return out

    def error_estimate(self, x):
        """Truncation estimate: the neglected tail is bounded by the last sampled magnitude."""
        x = np.asarray(x, dtype=float)
        return x ** (-self.c) * self.tail * self.block / math.pi


@lru_cache(maxsize=None)
def _density(model: PsiModel) -> MellinDensity:
    return MellinDensity(model)


def density_m(model: PsiModel, x, with_error: bool = False):
    """Density of V_psi at x > 0 (clipped at 0)."""
    dens = _density(model)
    vals = np.maximum(dens(x), 0.0)
    if np.ndim(x) == 0:
        vals = float(vals[0])
    if with_error:
        return vals, dens.error_estimate(x)
    return vals


def density_integral(model: PsiModel, power: int = 0, x_small: float = 1e-6, x_large: float | None = None) -> float:
    """int x^power m(x) dx by Gauss-Legendre panels in log x.

    Near 0 the density behaves like C0 x^(-theta), with C0 the residue of the
    Mellin transform at theta; that piece is added analytically.
    """
    theta = model.require_theta()
    if x_large is None:
        x_large = 80.0
    dens = _density(model)
    s_lo, s_hi = math.log(x_small), math.log(x_large)
    panels = int(math.ceil((s_hi - s_lo) / 0.25))
    nodes, weights = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(s_lo, s_hi, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    s = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    x = np.exp(s)
    body = float(np.sum(w * dens(x) * x ** (power + 1)))
    c0 = math.exp(float(np.real(log_wphi(model, theta))) - gammaln(1 - theta) - gammaln(theta))
    head = c0 * x_small ** (power + 1 - theta) / (power + 1 - theta)
    return body + head


# -- Gauss rule for I_phi ------------------------------------------------------------


@dataclass(frozen=True)
class GaussRule:
    nodes: np.ndarray
    weights: np.ndarray

    def __call__(self, f, x=1.0):
        return float(np.sum(self.weights * f(x * self.nodes)))


def _recurrence_from_moments(mu, n, ctx):
    """Chebyshev's algorithm: alpha_j, beta_j (j < n) from moments mu_0..mu_{2n-1}."""
    alpha, beta = [], []
    sigma_prev = [ctx.zero] * (2 * n)
    sigma = [mu[l] for l in range(2 * n)]
    alpha.append(mu[1] / mu[0])
    beta.append(mu[0])
    for k in range(1, n):
        new = [ctx.zero] * (2 * n)
        for l in range(k, 2 * n - k):
            new[l] = sigma[l + 1] - alpha[k - 1] * sigma[l] - beta[k - 1] * sigma_prev[l]
        if new[k] <= 0:
            return alpha, beta, k
        alpha.append(new[k + 1] / new[k] - sigma[k] / sigma[k - 1])
        beta.append(new[k] / sigma[k - 1])
        sigma_prev, sigma = sigma, new
    return alpha, beta, n


def gauss_rule_iphi(model: PsiModel, k: int, dps: int = 60) -> GaussRule:
    """k-point Gauss rule for the law of I_phi built from its moments.

    A law with fewer than k support points (I_phi = 1 in the classical case)
    yields a rule with as many nodes as it has support points.
    """
    if not 1 <= k <= 8:
        raise DomainError("rule order must satisfy 1 <= k <= 8")
    ctx = mpmath.MPContext()
    ctx.dps = dps
    # multiply the factors k/phi(k) in extended precision so the Hankel
    # structure is not destroyed by rounding in the moments themselves
    mu = [ctx.one]
    for j in range(1, 2 * k):
        mu.append(mu[-1] * j / ctx.mpf(float(model.phi(float(j)))))
    alpha, beta, order = _recurrence_from_moments(mu, k, ctx)
    # a vanishing beta (relative to the scale) means the support is exhausted
    for j in range(1, order):
        if beta[j] < ctx.mpf(10) ** (-30) * alpha[j - 1] ** 2:
            order = j
            break
    jac = ctx.zeros(order, order)
    for i in range(order):
        jac[i, i] = alpha[i]
        if i + 1 < order:
            jac[i, i + 1] = jac[i + 1, i] = ctx.sqrt(beta[i + 1])
    if order == 1:
        nodes = np.array([float(alpha[0])])
        weights = np.array([1.0])
    else:
        evals, evecs = ctx.eigsy(jac)
        nodes = np.array([float(v) for v in evals])
        weights = np.array([float(evecs[0, i] ** 2) for i in range(order)])
        idx = np.argsort(nodes)
        nodes, weights = nodes[idx], weights[idx]
    if np.any(weights <= 0) or np.any(nodes <= 0) or np.any(np.diff(nodes) <= 0):
        raise IllConditioned(f"order-{k} rule has invalid nodes/weights; reduce k")
    for j in range(2 * order):
        approx = float(np.sum(weights * nodes**j))
        if abs(approx / float(mu[j]) - 1.0) > 1e-8:
            raise IllConditioned(f"order-{k} rule misses moment {j} by {abs(approx / float(mu[j]) - 1):.2e}")
    return GaussRule(nodes=nodes, weights=weights / np.sum(weights))
