"""Spectrally negative Levy models, their Laplace exponent and the Bernstein chain.

The Laplace exponent of a model (beta, sigma2, Pi, kappa) is

    psi(z) = beta*z + sigma2/2 * z**2
             + int (exp(-z*y) - 1 + z*y*1{y<1}) Pi(dy) - kappa,

which is convex on [0, inf).  Jump measures are finite sums of point masses
and exponential densities, so every integral below is in closed form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConvergenceFailure, DomainError, NoRootInUnitInterval

__all__ = [
    "Atom",
    "ExpDensity",
    "LevyQuadruplet",
    "ModelFlags",
    "PsiModel",
    "build_model",
    "classical_model",
    "model_from_dict",
    "model_to_dict",
    "load_model",
    "psi_eval",
    "find_theta",
    "classify",
    "derived_exponent",
    "log_wphi",
    "wphi",
    "wphi_residual",
]


@dataclass(frozen=True)
class Atom:
    """Point mass ``w`` at jump size ``y``."""

    y: float
    w: float

    def __post_init__(self):
        if not (self.y > 0 and self.w > 0):
            raise DomainError(f"atom needs y > 0 and w > 0, got y={self.y}, w={self.w}")


@dataclass(frozen=True)
class ExpDensity:
    """Jump density ``c * exp(-lam * y)`` on (0, inf)."""

    c: float
    lam: float

    def __post_init__(self):
        if not (self.c > 0 and self.lam > 0):
            raise DomainError(f"exp density needs c > 0 and lambda > 0, got c={self.c}, lambda={self.lam}")


@dataclass(frozen=True)
class LevyQuadruplet:
    beta: float
    sigma2: float
    jumps: tuple = ()
    kappa: float = 0.0

    def __post_init__(self):
        if self.sigma2 < 0 or self.kappa < 0:
            raise DomainError("sigma2 and kappa must be nonnegative")
        object.__setattr__(self, "jumps", tuple(self.jumps))
        for comp in self.jumps:
            if not isinstance(comp, (Atom, ExpDensity)):
                raise DomainError(f"unknown jump component {comp!r}")

    @property
    def atoms(self):
        return [c for c in self.jumps if isinstance(c, Atom)]

    @property
    def densities(self):
        return [c for c in self.jumps if isinstance(c, ExpDensity)]


@dataclass(frozen=True)
class ModelFlags:
    n_up: bool
    n_check: bool
    n_p: bool
    nbar_inf: bool

    def as_dict(self):
        return {"N_up": self.n_up, "N_check": self.n_check, "N_P": self.n_p, "Nbar_inf": self.nbar_inf}


def _exp_linear_coeff(lam):
    # int_0^1 y e^{-lam y} dy
    return (1.0 - math.exp(-lam) * (1.0 + lam)) / lam**2


@dataclass(frozen=True)
class PsiModel:
    """A Levy quadruplet together with its cached root, flags and constants.

    Build instances with :func:`build_model`; the constructor does not search
    for the root.
    """

    quad: LevyQuadruplet
    theta: float | None
    flags: ModelFlags
    frakb: float | None
    double_tail_zero: float
    label: str = field(default="", compare=False)

    # -- the exponent and its derivatives, vectorised over z --------------

    def psi(self, z):
        q = self.quad
        z = np.asarray(z)
        out = q.beta * z + 0.5 * q.sigma2 * z * z - q.kappa
        for a in q.atoms:
            small = a.y if a.y < 1 else 0.0
            out = out + a.w * (np.exp(-z * a.y) - 1.0 + z * small)
        for d in q.densities:
            out = out + d.c * (1.0 / (z + d.lam) - 1.0 / d.lam + z * _exp_linear_coeff(d.lam))
        return out[()] if out.ndim == 0 else out

    def dpsi(self, z, order=1):
        """Derivative of psi of the given order (1 to 5)."""
        q = self.quad
        z = np.asarray(z)
        if order == 1:
            out = q.beta + q.sigma2 * z
        elif order == 2:
            out = q.sigma2 + 0.0 * z
        else:
            out = 0.0 * z
        for a in q.atoms:
            term = a.w * (-a.y) ** order * np.exp(-z * a.y)
            if order == 1 and a.y < 1:
                term = term + a.w * a.y
            out = out + term
        for d in q.densities:
            term = d.c * (-1) ** order * math.factorial(order) / (z + d.lam) ** (order + 1)
            if order == 1:
                term = term + d.c * _exp_linear_coeff(d.lam)
            out = out + term
        return out[()] if out.ndim == 0 else out

    # -- the Bernstein chain ----------------------------------------------

    def phi(self, u):
        """psi(u) / (u - theta), with the removable singularity filled in."""
        theta = self.require_theta()
        u = np.asarray(u)
        h = u - theta
        near = np.abs(h) < 1e-4
        safe_h = np.where(near, 1.0, h)
        direct = self.psi(u) / safe_h
        if np.any(near):
            taylor = (
                self.dpsi(theta, 1)
                + self.dpsi(theta, 2) * h / 2
                + self.dpsi(theta, 3) * h * h / 6
                + self.dpsi(theta, 4) * h**3 / 24
            )
            direct = np.where(near, taylor, direct)
        return direct[()] if direct.ndim == 0 else direct

    def log_phi_derivatives(self, u):
        """First and third derivatives of log(phi) at points away from theta."""
        theta = self.require_theta()
        p0 = self.psi(u)
        p1 = self.dpsi(u, 1) / p0
        p2 = self.dpsi(u, 2) / p0
        p3 = self.dpsi(u, 3) / p0
        shift = np.asarray(u) - theta
        d1 = p1 - 1.0 / shift
        d3 = p3 - 3.0 * p1 * p2 + 2.0 * p1**3 - 2.0 / shift**3
        return d1, d3

    def require_theta(self):
        if self.theta is None:
            raise DomainError("this model has no root theta in (0, 1)")
        return self.theta


# -- construction -------------------------------------------------------------


def _psi_scalar(quad, u):
    out = quad.beta * u + 0.5 * quad.sigma2 * u * u - quad.kappa
    for a in quad.atoms:
        out += a.w * (math.exp(-u * a.y) - 1.0 + u * (a.y if a.y < 1 else 0.0))
    for d in quad.densities:
        out += d.c * (1.0 / (u + d.lam) - 1.0 / d.lam + u * _exp_linear_coeff(d.lam))
    return out


def _dpsi_scalar(quad, u):
    out = quad.beta + quad.sigma2 * u
    for a in quad.atoms:
        out += a.w * (-a.y * math.exp(-u * a.y) + (a.y if a.y < 1 else 0.0))
    for d in quad.densities:
        out += d.c * (-1.0 / (u + d.lam) ** 2 + _exp_linear_coeff(d.lam))
    return out


def _root_in_unit_interval(quad):
    lo, hi = 1e-10, 1.0 - 1e-10
    f_lo, f_hi = _psi_scalar(quad, lo), _psi_scalar(quad, hi)
    if f_lo * f_hi > 0 or (f_lo == 0 and f_hi == 0):
        raise NoRootInUnitInterval(_psi_scalar(quad, 0.5))
    if f_lo == 0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = _psi_scalar(quad, mid)
        if f_mid == 0:
            lo = hi = mid
            break
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo < 1e-9:
            break
    x = 0.5 * (lo + hi)
    for _ in range(50):
        step = _psi_scalar(quad, x) / _dpsi_scalar(quad, x)
        x -= step
        if abs(step) <= 1e-14 * abs(x):
            break
    return x


def _double_tail_zero(quad):
    total = sum(a.w * a.y for a in quad.atoms)
    total += sum(d.c / d.lam**2 for d in quad.densities)
    return total


def _large_jump_moment_finite(quad, theta):
    # int_{x>1} x e^{theta x} Pi(dx): atoms are always fine, densities need lam > theta
    return all(d.lam > theta for d in quad.densities)


def build_model(quad: LevyQuadruplet, theta: float | None = None, label: str = "") -> PsiModel:
    """Locate theta (unless supplied), set the membership flags and frakb."""
    if theta is None:
        try:
            theta = _root_in_unit_interval(quad)
        except NoRootInUnitInterval:
            theta = None
    else:
        theta = float(theta)
        if not 0 < theta < 1:
            raise DomainError(f"theta must lie in (0, 1), got {theta}")
        scale = max(1.0, abs(_dpsi_scalar(quad, theta)))
        if abs(_psi_scalar(quad, theta)) > 1e-12 * scale:
            raise DomainError(f"supplied theta={theta} is not a root of psi")
    tail0 = _double_tail_zero(quad)
    n_p = quad.sigma2 > 0
    flags = ModelFlags(
        n_up=quad.beta >= 0 and quad.kappa == 0,
        n_check=theta is not None and _large_jump_moment_finite(quad, theta),
        n_p=n_p,
        # the double tail at 0+ is finite for both jump families
        nbar_inf=n_p,
    )
    frakb = (quad.beta + tail0) / quad.sigma2 if n_p else None
    return PsiModel(quad=quad, theta=theta, flags=flags, frakb=frakb, double_tail_zero=tail0, label=label)


@lru_cache(maxsize=None)
def classical_model(theta: float) -> PsiModel:
    """The Gamma-stationary case psi(u) = u (u - theta)."""
    return build_model(LevyQuadruplet(beta=-theta, sigma2=2.0), theta=theta, label=f"classical(theta={theta})")


# -- JSON config ----------------------------------------------------------------


def model_from_dict(data: dict, label: str = "") -> PsiModel:
    try:
        jumps = []
        for i, comp in enumerate(data.get("jumps", [])):
            kind = comp.get("type")
            if kind == "atom":
                jumps.append(Atom(float(comp["y"]), float(comp["w"])))
            elif kind == "exp":
                jumps.append(ExpDensity(float(comp["c"]), float(comp["lambda"])))
            else:
                raise DomainError(f"jumps[{i}].type must be 'atom' or 'exp', got {kind!r}")
        quad = LevyQuadruplet(
            beta=float(data["beta"]),
            sigma2=float(data["sigma2"]),
            jumps=tuple(jumps),
            kappa=float(data.get("kappa", 0.0)),
        )
    except KeyError as exc:
        raise DomainError(f"model config is missing field {exc.args[0]!r}") from None
    except (TypeError, AttributeError) as exc:
        raise DomainError(f"malformed model config: {exc}") from None
    return build_model(quad, label=label)


def model_to_dict(model: PsiModel) -> dict:
    q = model.quad
    jumps = []
    for comp in q.jumps:
        if isinstance(comp, Atom):
            jumps.append({"type": "atom", "y": comp.y, "w": comp.w})
        else:
            jumps.append({"type": "exp", "c": comp.c, "lambda": comp.lam})
    return {"beta": q.beta, "sigma2": q.sigma2, "kappa": q.kappa, "jumps": jumps}


def load_model(path) -> PsiModel:
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return model_from_dict(data, label=str(path))


# -- operations -----------------------------------------------------------------


def psi_eval(model: PsiModel, z):
    """psi(z) for Re z >= 0."""
    if np.any(np.real(z) < 0):
        raise DomainError("psi is evaluated only on Re z >= 0")
    return model.psi(z)


def find_theta(model: PsiModel) -> float:
    if model.theta is None:
        raise NoRootInUnitInterval(float(model.psi(0.5)))
    return model.theta


def classify(model: PsiModel) -> dict:
    return {
        "theta": model.theta,
        "flags": model.flags.as_dict(),
        "frakb": model.frakb,
        "double_tail_zero": model.double_tail_zero,
    }


def derived_exponent(model: PsiModel, kind: str, u):
    """Evaluate one member of the chain phi, psi_up, t1psi, phi1, phi_up."""
    if np.any(np.asarray(u) < 0):
        raise DomainError("derived exponents are evaluated on u >= 0")
    theta = model.require_theta()
    u = np.asarray(u, dtype=float)
    if kind == "phi":
        return model.phi(u)
    if kind == "psi_up":
        return model.psi(u + theta)
    if kind == "t1psi":
        return u * model.psi(u + 1.0) / (u + 1.0)
    if kind == "phi1":
        return model.psi(u + 1.0) / (u + 1.0)
    if kind == "phi_up":
        return model.phi(u + theta)
    raise DomainError(f"unknown exponent kind {kind!r}")


# -- the generalized Weierstrass product W_phi ------------------------------------

# Gauss-Legendre nodes on [0, 1] for the integral in the tail correction
_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def _is_positive_integer(z):
    return np.imag(z) == 0 and float(np.real(z)) == round(float(np.real(z))) and np.real(z) >= 1


def _log_wphi_integer(model, n):
    if n == 1:
        return 0.0
    return float(np.sum(np.log(model.phi(np.arange(1, n, dtype=float)))))


def _log_wphi_truncated(model, z, n_terms):
    """log W_phi(z) from N factors of the functional equation plus a tail correction.

    W(z) = W(z+N) / prod_{k<N} phi(z+k), and log W(N+z) - log W(N) is
    expanded by Euler-Maclaurin in terms of Delta = log phi:
        int_N^{N+z} Delta - [Delta]/2 + [Delta']/12 - [Delta''']/720.
    """
    z = np.asarray(z, dtype=complex)
    k = np.arange(n_terms, dtype=float)
    head = np.sum(np.log(model.phi(np.arange(1, n_terms, dtype=float))))
    body = np.sum(np.log(model.phi(z[:, None] + k[None, :])), axis=1)
    big_n = float(n_terms)
    upper = big_n + z
    path = big_n + z[:, None] * _GL_X[None, :]
    integral = z * np.sum(_GL_W[None, :] * np.log(model.phi(path)), axis=1)
    d0_up, d0_lo = np.log(model.phi(upper)), math.log(model.phi(big_n))
    d1_up, d3_up = model.log_phi_derivatives(upper)
    d1_lo, d3_lo = model.log_phi_derivatives(big_n)
    shift = integral - 0.5 * (d0_up - d0_lo) + (d1_up - d1_lo) / 12.0 - (d3_up - d3_lo) / 720.0
    return head + shift - body


def _residual(model, z, logw, logw_next):
    ratio = np.exp(np.log(model.phi(z)) + logw - logw_next)
    return np.abs(1.0 - ratio)


def log_wphi(model: PsiModel, z, tol: float = 1e-10, return_residual: bool = False):
    """Complex logarithm of W_phi(z) for Re z > 0 (vectorised over z).

    Positive integers use the exact product; other points use an adaptive
    number of factors, doubled until the functional-equation residual drops
    below ``tol``.
    """
    model.require_theta()
    scalar = np.ndim(z) == 0
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z_arr.real <= 0):
        raise DomainError("W_phi is evaluated on Re z > 0")
    out = np.empty(z_arr.shape, dtype=complex)
    res = np.zeros(z_arr.shape)
    integer = np.array([_is_positive_integer(v) for v in z_arr])
    for i in np.flatnonzero(integer):
        out[i] = _log_wphi_integer(model, int(round(z_arr[i].real)))
    todo = np.flatnonzero(~integer)
    n_terms = 32
    while todo.size:
        zz = z_arr[todo]
        n_eff = max(n_terms, int(2 * np.max(np.abs(zz.imag))) + 1)
        lw = _log_wphi_truncated(model, zz, n_eff)
        lw1 = _log_wphi_truncated(model, zz + 1.0, n_eff)
        r = _residual(model, zz, lw, lw1)
        ok = r < tol
        out[todo[ok]] = lw[ok]
        res[todo[ok]] = r[ok]
        todo = todo[~ok]
        n_terms *= 2
        if todo.size and n_terms > 10**6:
            raise ConvergenceFailure(
                f"W_phi residual {np.max(r[~ok]):.3e} above {tol:.1e} at N = 10^6 for z = {z_arr[todo][0]}"
            )
    if return_residual:
        return (out[0], res[0]) if scalar else (out, res)
    if np.all(out.imag == 0) and np.all(z_arr.imag == 0):
        out_real = out.real
        return float(out_real[0]) if scalar else out_real
    return complex(out[0]) if scalar else out


def wphi(model: PsiModel, z, tol: float = 1e-10):
    """W_phi(z): W(1) = 1, W(z+1) = phi(z) W(z), log-convex on (0, inf)."""
    return np.exp(log_wphi(model, z, tol=tol))


def wphi_residual(model: PsiModel, z) -> float:
    """|W(z+1) - phi(z) W(z)| / |W(z+1)| computed from two independent evaluations."""
    lw = log_wphi(model, z)
    lw1 = log_wphi(model, np.asarray(z) + 1.0)
    return float(np.abs(1.0 - np.exp(np.log(model.phi(z)) + lw - lw1)))
