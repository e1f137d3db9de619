"""Path simulation and Monte Carlo checks of the exact engine.

Three layers of processes are simulated:

* the Levy process xi with exponent psi (Gaussian part plus compound Poisson
  negative jumps, exact in law over any step length),
* the positive self-similar process Xbar_t = x0 exp(xi_{T(t/x0)}) where T
  inverts the clock A(s) = int_0^s exp(xi_r) dr,
* the Laguerre-type process X_t = exp(-t) Xbar_{exp(t) - 1}.

The batch kernels fuse the three layers and adapt the Levy step to the
current level (long steps when the process is near 0, where it contributes
almost nothing to either clock).  Every replica draws from its own Philox
stream, so results do not depend on how replicas are spread over threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numba import njit
from scipy import stats
from scipy.special import gammaln, hyperu

from .bernstein import Atom, LevyQuadruplet, PsiModel, classical_model
from .distributions import gauss_rule_iphi
from .errors import ClockOverrun, DomainError
from .polys import ThetaShiftedPoly
from .rng import new_stream, normal, poisson, uniform

__all__ = [
    "PathConfig",
    "PathSample",
    "simulate_levy",
    "lamperti_path",
    "laguerre_path",
    "restart_path",
    "simulate_classical",
    "KilledSemigroup",
    "HittingLaplace",
    "StationaryMoment",
    "Estimate",
    "estimate",
    "sample_observable",
    "classical_sde_hitting_laplace",
    "classical_hitting_laplace_exact",
    "classical_law_cdf",
    "HittingCheck",
    "hitting_intertwining_check",
    "PipelineKS",
    "classical_pipeline_ks",
]

# stream tags: one per kind of draw so that no two uses share numbers
_TAG_LEVY_PATH = 1
_TAG_KILLED = 2
_TAG_HIT = 3
_TAG_STATIONARY = 4
_TAG_RESTART_VALUE = 5
_TAG_CLASSICAL_PATH = 6
_TAG_CLASSICAL_VALUE = 7
_TAG_CLASSICAL_HIT = 64  # plus the node index

_BLOCK = 512


@dataclass(frozen=True)
class PathConfig:
    """Discretization and sampling settings.

    ``dt`` is the Levy-clock step at unit level; the batch kernels stretch it
    up to ``max_step`` when the process sits below 1.
    """

    dt: float = 1e-3
    horizon: float = 10.0
    eps_absorb: float = 1e-8
    seed: int = 20240601
    replicas: int = 10_000
    max_step: float = 0.25

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("dt must be > 0")
        if self.horizon < 0:
            raise DomainError("horizon must be >= 0")
        if not self.eps_absorb > 0:
            raise DomainError("eps_absorb must be > 0")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must fit in 64 bits")
        if self.replicas < 1:
            raise DomainError("replicas must be >= 1")
        if self.max_step < self.dt:
            raise DomainError("max_step must be >= dt")


@dataclass(frozen=True)
class PathSample:
    """One trajectory on a grid; ``log_interp`` interpolates log-states between grid points."""

    times: np.ndarray
    states: np.ndarray
    absorbed: bool = False
    absorption_time: float = math.inf
    log_interp: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def value_at(self, t: float) -> float:
        if self.times.size == 0:
            raise ClockOverrun("empty path")
        if self.absorbed and t >= self.absorption_time:
            return 0.0
        if t > self.times[-1]:
            raise ClockOverrun(f"path covers times up to {self.times[-1]:.6g}, asked for {t:.6g}")
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        i = min(max(i, 0), self.times.size - 2) if self.times.size > 1 else 0
        if self.times.size == 1:
            return float(self.states[0])
        t0, t1 = self.times[i], self.times[i + 1]
        s0, s1 = self.states[i], self.states[i + 1]
        w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        if self.log_interp and s0 > 0 and s1 > 0:
            return float(math.exp((1 - w) * math.log(s0) + w * math.log(s1)))
        return float((1 - w) * s0 + w * s1)


# -- Levy parameters in kernel form ---------------------------------------


class _Levy(NamedTuple):
    drift: float
    sigma: float
    kappa: float
    rate: float
    cum: np.ndarray
    kind: np.ndarray
    par: np.ndarray


def _levy_params(model) -> _Levy:
    """Pathwise drift b = beta + int_0^1 y Pi(dy), Gaussian scale and jump table."""
    quad = model.quad if isinstance(model, PsiModel) else model
    if not isinstance(quad, LevyQuadruplet):
        raise DomainError("expected a PsiModel or LevyQuadruplet")
    drift = quad.beta
    rates, kinds, pars = [], [], []
    for comp in quad.jumps:
        if isinstance(comp, Atom):
            if comp.y < 1:
                drift += comp.w * comp.y
            rates.append(comp.w)
            kinds.append(0)
            pars.append(comp.y)
        else:
            lam = comp.lam
            drift += comp.c * (1.0 - math.exp(-lam) * (1.0 + lam)) / lam**2
            rates.append(comp.c / lam)
            kinds.append(1)
            pars.append(lam)
    if not rates:
        rates, kinds, pars = [0.0], [0], [0.0]
    cum = np.cumsum(rates)
    return _Levy(
        drift=float(drift),
        sigma=math.sqrt(quad.sigma2),
        kappa=float(quad.kappa),
        rate=float(cum[-1]),
        cum=cum.astype(np.float64),
        kind=np.array(kinds, dtype=np.int64),
        par=np.array(pars, dtype=np.float64),
    )


# -- kernels ----------------------------------------------------------------


@njit(cache=True, nogil=True)
def _increment(h, drift, sigma, rate, cum, kind, par, st, buf):
    dx = drift * h + sigma * math.sqrt(h) * normal(st, buf)
    if rate > 0.0:
        n = poisson(st, buf, rate * h)
        for _ in range(n):
            u = uniform(st, buf) * rate
            i = 0
            while i < cum.size - 1 and u > cum[i]:
                i += 1
            if kind[i] == 0:
                dx -= par[i]
            else:
                dx += math.log(uniform(st, buf)) / par[i]
    return dx


@njit(cache=True, nogil=True)
def _killed(h, kappa, st, buf):
    return kappa > 0.0 and uniform(st, buf) < -math.expm1(-kappa * h)


@njit(cache=True, nogil=True)
def _step(level, dt, hmax):
    if level >= 1.0:
        return dt
    h = dt / level if level > 0.0 else hmax
    return hmax if h > hmax else h


@njit(cache=True, nogil=True)
def _levy_path_kernel(drift, sigma, kappa, rate, cum, kind, par, n, dt, seed, replica, tag):
    st = new_stream(seed, replica, tag)
    buf = np.zeros(3)
    out = np.empty(n + 1)
    out[0] = 0.0
    killed_at = -1
    for i in range(n):
        if _killed(dt, kappa, st, buf):
            killed_at = i + 1
            for j in range(i + 1, n + 1):
                out[j] = -np.inf
            break
        out[i + 1] = out[i] + _increment(dt, drift, sigma, rate, cum, kind, par, st, buf)
    return out, killed_at


@njit(cache=True, nogil=True)
def _killed_value_kernel(drift, sigma, kappa, rate, cum, kind, par, x0, tau, log_eps, dt, hmax, max_steps, seed, tag, r0, r1, out):
    """Xbar at Xbar-time tau from x0 (0 once absorbed, nan on overrun)."""
    buf = np.zeros(3)
    target = tau / x0
    for r in range(r0, r1):
        st = new_stream(seed, r, tag)
        xi = 0.0
        e = 1.0
        a = 0.0
        res = np.nan
        for _ in range(max_steps):
            h = _step(x0 * e, dt, hmax)
            if _killed(h, kappa, st, buf):
                res = 0.0
                break
            xn = xi + _increment(h, drift, sigma, rate, cum, kind, par, st, buf)
            en = math.exp(xn)
            an = a + 0.5 * h * (e + en)
            if an >= target:
                w = (target - a) / (an - a)
                res = x0 * math.exp(xi + w * (xn - xi))
                break
            if xn <= log_eps:
                res = 0.0
                break
            xi, e, a = xn, en, an
        out[r] = res


@njit(cache=True, nogil=True)
def _hitting_kernel(drift, sigma, kappa, rate, cum, kind, par, x0, log_eps, dt, hmax, t_max, max_steps, seed, tag, r0, r1, out):
    """Time for X (equivalently Xbar) started at x0 to reach eps; inf if killed or beyond t_max."""
    buf = np.zeros(3)
    a_max = math.expm1(t_max) / x0
    for r in range(r0, r1):
        st = new_stream(seed, r, tag)
        xi = 0.0
        e = 1.0
        a = 0.0
        res = np.inf
        for _ in range(max_steps):
            level = x0 * e / (1.0 + x0 * a)
            h = _step(level, dt, hmax)
            if _killed(h, kappa, st, buf):
                break
            xn = xi + _increment(h, drift, sigma, rate, cum, kind, par, st, buf)
            en = math.exp(xn)
            a += 0.5 * h * (e + en)
            if a > a_max:
                break
            if xn <= log_eps:
                res = math.log1p(x0 * a)
                break
            xi, e = xn, en
        out[r] = res


@njit(cache=True, nogil=True)
def _restart_kernel(drift, sigma, kappa, rate, cum, kind, par, x0, horizon, eps, dt, hmax, powers, max_steps, seed, tag, r0, r1, out):
    """Time averages of X^p over [0, horizon] for the eps-restarted process.

    A segment starts at level s0 (x0, then eps after each absorption); within
    it X = s0 e^xi / (1 + s0 A) and X-time runs as t0 + log(1 + s0 A).
    """
    buf = np.zeros(3)
    npow = powers.size
    acc = np.zeros(npow)
    for r in range(r0, r1):
        st = new_stream(seed, r, tag)
        acc[:] = 0.0
        s0 = x0
        t0 = 0.0
        xi = 0.0
        e = 1.0
        a = 0.0
        t = 0.0
        x = x0
        done = False
        for _ in range(max_steps):
            h = _step(x, dt, hmax)
            killed = _killed(h, kappa, st, buf)
            xn = xi + _increment(h, drift, sigma, rate, cum, kind, par, st, buf)
            en = math.exp(xn)
            an = a + 0.5 * h * (e + en)
            tn = t0 + math.log1p(s0 * an)
            xnew = s0 * en / (1.0 + s0 * an)
            if tn >= horizon:
                w = (horizon - t) / (tn - t) if tn > t else 0.0
                xend = x + w * (xnew - x)
                for k in range(npow):
                    acc[k] += 0.5 * (horizon - t) * (x ** powers[k] + xend ** powers[k])
                done = True
                break
            for k in range(npow):
                acc[k] += 0.5 * (tn - t) * (x ** powers[k] + xnew ** powers[k])
            t = tn
            if killed or s0 * en <= eps:
                s0 = eps
                t0 = tn
                xi = 0.0
                e = 1.0
                a = 0.0
                x = eps
            else:
                xi, e, a, x = xn, en, an, xnew
        for k in range(npow):
            out[r, k] = acc[k] / horizon if done else np.nan


@njit(cache=True, nogil=True)
def _restart_value_kernel(drift, sigma, kappa, rate, cum, kind, par, x0, t_end, eps, dt, hmax, max_steps, seed, tag, r0, r1, out):
    """X at X-time t_end for the eps-restarted process."""
    buf = np.zeros(3)
    for r in range(r0, r1):
        st = new_stream(seed, r, tag)
        s0 = x0
        t0 = 0.0
        xi = 0.0
        e = 1.0
        a = 0.0
        x = x0
        res = np.nan
        for _ in range(max_steps):
            target = math.expm1(t_end - t0) / s0
            h = _step(x, dt, hmax)
            killed = _killed(h, kappa, st, buf)
            xn = xi + _increment(h, drift, sigma, rate, cum, kind, par, st, buf)
            en = math.exp(xn)
            an = a + 0.5 * h * (e + en)
            if an >= target:
                w = (target - a) / (an - a)
                res = math.exp(-(t_end - t0)) * s0 * math.exp(xi + w * (xn - xi))
                break
            if killed or s0 * en <= eps:
                t0 = t0 + math.log1p(s0 * an)
                s0 = eps
                xi = 0.0
                e = 1.0
                a = 0.0
                x = eps
            else:
                xi, e, a = xn, en, an
                x = s0 * en / (1.0 + s0 * an)
        out[r] = res


@njit(cache=True, nogil=True)
def _classical_path_kernel(theta, x0, n, dt, seed, replica, tag):
    st = new_stream(seed, replica, tag)
    buf = np.zeros(3)
    out = np.empty(n + 1)
    out[0] = x0
    sq = math.sqrt(2.0 * dt)
    for i in range(n):
        x = out[i]
        out[i + 1] = abs(x + (1.0 - theta - x) * dt + sq * math.sqrt(max(x, 0.0)) * normal(st, buf))
    return out


@njit(cache=True, nogil=True)
def _classical_value_kernel(theta, x0, n, dt, seed, tag, r0, r1, out):
    buf = np.zeros(3)
    sq = math.sqrt(2.0 * dt)
    for r in range(r0, r1):
        st = new_stream(seed, r, tag)
        x = x0
        for _ in range(n):
            x = abs(x + (1.0 - theta - x) * dt + sq * math.sqrt(x) * normal(st, buf))
        out[r] = x


@njit(cache=True, nogil=True)
def _classical_hit_kernel(theta, x0, dt, gamma, eps, t_max, seed, tag, r0, r1, out):
    """First time the Euler scheme steps to or below eps; steps shrink like gamma*x near 0."""
    buf = np.zeros(3)
    for r in range(r0, r1):
        st = new_stream(seed, r, tag)
        x = x0
        t = 0.0
        res = np.inf
        while t < t_max:
            h = gamma * x
            if h > dt:
                h = dt
            xn = x + (1.0 - theta - x) * h + math.sqrt(2.0 * x * h) * normal(st, buf)
            t += h
            if xn <= eps:
                res = t
                break
            x = xn
        out[r] = res


@njit(cache=True, nogil=True)
def _classical_hit_milstein_kernel(theta, x0, dt, t_max, seed, tag, r0, r1, out):
    """Hitting time of 0 with the square-root Milstein step and a bridge crossing test.

    The step is X' = (sqrt(X) + sqrt(h/2) Z)^2 + (1/2 - theta - X) h.  The
    root variable behaves like a Brownian motion with variance 1/2 per unit
    time near 0, so between two positive values it crossed 0 with
    probability exp(-4 a b / h).  Crossings are dated at the step midpoint.
    """
    buf = np.zeros(3)
    s = math.sqrt(0.5 * dt)
    for r in range(r0, r1):
        st = new_stream(seed, r, tag)
        x = x0
        t = 0.0
        res = np.inf
        while t < t_max:
            y = math.sqrt(x)
            root = y + s * normal(st, buf)
            xn = root * root + (0.5 - theta - x) * dt
            t += dt
            if root <= 0.0 or xn <= 0.0:
                res = t - 0.5 * dt
                break
            if uniform(st, buf) < math.exp(-4.0 * y * root / dt):
                res = t - 0.5 * dt
                break
            x = xn
        out[r] = res


# -- driver -----------------------------------------------------------------


def _run(kernel, args, replicas: int, threads: int, out: np.ndarray) -> np.ndarray:
    """Run kernel(*args, r0, r1, out) over fixed replica blocks, possibly in threads."""
    blocks = [(r0, min(r0 + _BLOCK, replicas)) for r0 in range(0, replicas, _BLOCK)]
    if threads <= 1:
        for r0, r1 in blocks:
            kernel(*args, r0, r1, out)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda b: kernel(*args, b[0], b[1], out), blocks))
    return out


def _max_steps(cfg: PathConfig, span: float) -> int:
    return int(min(2e9, 50 * span / cfg.dt + 1e6))


# -- single-path API --------------------------------------------------------


def simulate_levy(model, cfg: PathConfig, replica: int = 0) -> PathSample:
    """One path of xi on the uniform grid of step cfg.dt up to cfg.horizon."""
    lev = _levy_params(model)
    n = int(round(cfg.horizon / cfg.dt))
    if n == 0:
        return PathSample(times=np.empty(0), states=np.empty(0))
    xi, killed_at = _levy_path_kernel(*lev, n, cfg.dt, cfg.seed, replica, _TAG_LEVY_PATH)
    times = np.arange(n + 1) * cfg.dt
    if killed_at >= 0:
        return PathSample(times[:killed_at + 1], xi[:killed_at + 1], absorbed=True, absorption_time=float(times[killed_at]))
    return PathSample(times, xi)


def lamperti_path(levy: PathSample, x0: float, eps_absorb: float | None = None) -> PathSample:
    """Xbar from a path of xi: times x0*A(s_i), states x0*exp(xi(s_i))."""
    if not x0 > 0:
        raise DomainError("x0 must be > 0")
    s = levy.times
    xi = levy.states
    if s.size == 0:
        return PathSample(np.array([0.0]), np.array([float(x0)]), log_interp=True)
    finite = np.isfinite(xi)
    e = np.where(finite, np.exp(np.where(finite, xi, 0.0)), 0.0)
    clock = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(s) * (e[:-1] + e[1:]))))
    times = x0 * clock
    states = x0 * e
    absorbed = levy.absorbed
    hit = np.flatnonzero(states <= (eps_absorb if eps_absorb is not None else 0.0))
    if hit.size:
        k = int(hit[0])
        times = times[: k + 1]
        states = states[: k + 1].copy()
        states[k] = 0.0
        absorbed = True
    elif absorbed:
        states = states.copy()
        states[-1] = 0.0
    absorption_time = float(times[-1]) if absorbed else math.inf
    return PathSample(times, states, absorbed=absorbed, absorption_time=absorption_time, log_interp=True)


def laguerre_path(ssmp: PathSample, horizon: float | None = None) -> PathSample:
    """X_t = exp(-t) Xbar_{exp(t)-1}; absorption is inherited (minimal process)."""
    if horizon is not None and not ssmp.absorbed and ssmp.times[-1] < math.expm1(horizon):
        raise ClockOverrun(f"Xbar path reaches time {ssmp.times[-1]:.6g}, need {math.expm1(horizon):.6g}")
    times = np.log1p(ssmp.times)
    states = ssmp.states * np.exp(-times)
    return PathSample(
        times,
        states,
        absorbed=ssmp.absorbed,
        absorption_time=math.log1p(ssmp.absorption_time) if ssmp.absorbed else math.inf,
        log_interp=True,
    )


def restart_path(model, cfg: PathConfig, x0: float, replica: int = 0) -> PathSample:
    """X with restart at cfg.eps_absorb after each absorption, on a fine uniform Levy grid.

    Built from consecutive Lamperti segments of a single Levy path, so it
    is meant for inspection and plotting; the batch estimators use the
    fused kernels.
    """
    lev = _levy_params(model)
    times, states = [0.0], [float(x0)]
    t0, s0, offset = 0.0, float(x0), 0
    seg = 0
    while t0 < cfg.horizon:
        n = min(int(round(max(cfg.horizon - t0, cfg.dt) / cfg.dt * 4)) + 16, 1 << 16)
        xi, killed_at = _levy_path_kernel(*lev, n, cfg.dt, cfg.seed, replica + offset, _TAG_LEVY_PATH)
        offset += 1 << 20
        if killed_at >= 0:
            xi = xi[: killed_at + 1]
        e = np.exp(xi)
        clock = np.concatenate(([0.0], np.cumsum(0.5 * cfg.dt * (e[:-1] + e[1:]))))
        t = t0 + np.log1p(s0 * clock)
        x = s0 * e / (1 + s0 * clock)
        # index 0 is the start point, which may sit at eps after a restart
        absorbed = s0 * e[1:] <= cfg.eps_absorb
        stop = np.flatnonzero(absorbed | (t[1:] >= cfg.horizon))
        k = int(stop[0]) + 1 if stop.size else t.size - 1
        times.extend(t[1 : k + 1].tolist())
        states.extend(x[1 : k + 1].tolist())
        t0 = float(t[k])
        if stop.size and absorbed[k - 1]:
            s0 = cfg.eps_absorb
            seg += 1
        else:
            # grid ran out before absorption: continue the same excursion
            s0 = float(x[k])
        if seg > 100_000:
            raise ClockOverrun("too many restarts")
    return PathSample(np.array(times), np.array(states), log_interp=True, meta={"segments": seg})


def simulate_classical(theta: float, cfg: PathConfig, x0: float, replica: int = 0) -> PathSample:
    """Euler-Maruyama for dX = (1 - theta - X) dt + sqrt(2X) dW, reflected by |.|."""
    if not 0 < theta < 1:
        raise DomainError("theta must lie in (0, 1)")
    if x0 < 0:
        raise DomainError("x0 must be >= 0")
    n = int(round(cfg.horizon / cfg.dt))
    states = _classical_path_kernel(theta, float(x0), n, cfg.dt, cfg.seed, replica, _TAG_CLASSICAL_PATH)
    return PathSample(np.arange(n + 1) * cfg.dt, states)


# -- observables and estimators --------------------------------------------


@dataclass(frozen=True)
class KilledSemigroup:
    """E_x[f(X_t); t < T0] for f = x^theta * polynomial."""

    f: ThetaShiftedPoly
    x: float
    t: float


@dataclass(frozen=True)
class HittingLaplace:
    """E_x[exp(-q T0)] with T0 the (eps-)hitting time of 0."""

    q: float
    x: float


@dataclass(frozen=True)
class StationaryMoment:
    """Long-run time average of X^k for the eps-restarted process, started at x0."""

    k: float
    x0: float = 1.0


class Estimate(NamedTuple):
    value: float
    stderr: float


def _mean_se(samples: np.ndarray) -> Estimate:
    n = samples.size
    return Estimate(float(np.mean(samples)), float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else math.inf)


def sample_observable(model: PsiModel, observable, cfg: PathConfig, threads: int = 1) -> np.ndarray:
    """Per-replica samples whose mean estimates the observable."""
    lev = _levy_params(model)
    R = cfg.replicas
    out = np.empty(R)
    if isinstance(observable, KilledSemigroup):
        if observable.x <= 0 or observable.t < 0:
            raise DomainError("need x > 0 and t >= 0")
        if observable.t == 0:
            return np.full(R, float(observable.f(observable.x)))
        tau = math.expm1(observable.t)
        args = (*lev, float(observable.x), tau, math.log(cfg.eps_absorb / observable.x), cfg.dt, cfg.max_step,
                _max_steps(cfg, tau), cfg.seed, _TAG_KILLED)
        _run(_killed_value_kernel, args, R, threads, out)
        if np.isnan(out).any():
            raise ClockOverrun("a replica neither reached the target time nor was absorbed")
        t = observable.t
        xt = np.exp(-t) * out
        return np.where(xt > 0, observable.f(np.where(xt > 0, xt, 1.0)), 0.0)
    if isinstance(observable, HittingLaplace):
        q, x = observable.q, observable.x
        if q <= 0 or x <= 0:
            raise DomainError("need q > 0 and x > 0")
        t_max = min(60.0, 40.0 / q)
        args = (*lev, float(x), math.log(cfg.eps_absorb / x), cfg.dt, cfg.max_step, t_max,
                _max_steps(cfg, math.expm1(t_max)), cfg.seed, _TAG_HIT)
        _run(_hitting_kernel, args, R, threads, out)
        return np.exp(-q * out)
    if isinstance(observable, StationaryMoment):
        powers = np.array([float(observable.k)])
        out2 = np.empty((R, 1))
        args = (*lev, float(observable.x0), cfg.horizon, cfg.eps_absorb, cfg.dt, cfg.max_step, powers,
                _max_steps(cfg, cfg.horizon * 4), cfg.seed, _TAG_STATIONARY)
        _run(_restart_kernel, args, R, threads, out2)
        if np.isnan(out2).any():
            raise ClockOverrun("a replica did not reach the horizon")
        return out2[:, 0]
    raise DomainError(f"unknown observable {observable!r}")


def estimate(model: PsiModel, observable, cfg: PathConfig, threads: int = 1) -> Estimate:
    """Mean and standard error over cfg.replicas independent replicas."""
    return _mean_se(sample_observable(model, observable, cfg, threads))


# -- classical oracles ------------------------------------------------------


def classical_hitting_laplace_exact(theta: float, q: float, x):
    """Gamma(q+theta)/Gamma(theta) U(q, 1-theta, x): the decreasing q-eigenfunction equal to 1 at 0."""
    return np.exp(gammaln(q + theta) - gammaln(theta)) * hyperu(q, 1 - theta, np.asarray(x, dtype=float))


def classical_law_cdf(theta: float, x0: float, t: float):
    """CDF of X_t from x0 for the reflected classical process.

    X_t = e^{-t} Xbar_s with s = e^t - 1, and 2 Xbar_s / s is noncentral
    chi-square with 2(1-theta) degrees of freedom and noncentrality 2 x0 / s.
    """
    s = math.expm1(t)
    scale = math.exp(-t) * s / 2
    law = stats.ncx2(df=2 * (1 - theta), nc=2 * x0 / s, scale=scale)
    return law.cdf


def classical_sde_hitting_laplace(theta: float, q: float, x: float, cfg: PathConfig, threads: int = 1,
                                  tag_offset: int = 0, scheme: str = "milstein", gamma: float = 0.02) -> Estimate:
    """E_x[exp(-q T0)] for the classical process by time stepping its SDE.

    ``scheme="milstein"`` (default) uses the square-root Milstein step with a
    bridge crossing test.  ``scheme="euler"`` is plain Euler-Maruyama with steps
    shrinking like ``gamma * x`` near 0 and absorption below eps_absorb; its
    hitting probabilities carry an O(sqrt(dt)) bias (about 0.15 sqrt(dt) at
    q = x = 1, theta = 1/2).
    """
    out = np.empty(cfg.replicas)
    t_max = min(60.0, 40.0 / q)
    tag = _TAG_CLASSICAL_HIT + tag_offset
    if scheme == "milstein":
        args = (float(theta), float(x), cfg.dt, t_max, cfg.seed, tag)
        _run(_classical_hit_milstein_kernel, args, cfg.replicas, threads, out)
    elif scheme == "euler":
        args = (float(theta), float(x), cfg.dt, gamma, cfg.eps_absorb, t_max, cfg.seed, tag)
        _run(_classical_hit_kernel, args, cfg.replicas, threads, out)
    else:
        raise DomainError(f"scheme must be 'milstein' or 'euler', got {scheme!r}")
    return _mean_se(np.exp(-q * out))


@dataclass(frozen=True)
class HittingCheck:
    """Both sides of phi^X_q(x) = sum_j w_j phi^Y_q(x node_j), each from simulation."""

    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    rhs_exact: float

    @property
    def joint_se(self) -> float:
        return math.hypot(self.lhs_se, self.rhs_se)

    @property
    def z(self) -> float:
        return (self.lhs - self.rhs) / self.joint_se

    @property
    def passed(self) -> bool:
        return abs(self.z) <= 3.0


def hitting_intertwining_check(model: PsiModel, q: float, x: float, cfg: PathConfig, sde_cfg: PathConfig | None = None,
                               threads: int = 1, nodes: int = 6) -> HittingCheck:
    """Simulate phi^X_q(x) for the model and phi^Y_q at the I_phi quadrature nodes.

    The classical replicas are split over nodes in proportion to the
    weights.  ``rhs_exact`` applies the same rule to the closed-form phi^Y_q.
    """
    theta = model.require_theta()
    lhs = estimate(model, HittingLaplace(q, x), cfg, threads)
    rule = gauss_rule_iphi(model, nodes)
    sde_cfg = sde_cfg or cfg
    means, ses = [], []
    for j, (node, w) in enumerate(zip(rule.nodes, rule.weights)):
        reps = max(1000, int(round(sde_cfg.replicas * w)))
        sub = PathConfig(dt=sde_cfg.dt, horizon=sde_cfg.horizon, eps_absorb=sde_cfg.eps_absorb, seed=sde_cfg.seed,
                         replicas=reps, max_step=sde_cfg.max_step)
        est = classical_sde_hitting_laplace(theta, q, x * node, sub, threads, tag_offset=j)
        means.append(est.value)
        ses.append(est.stderr)
    w = np.asarray(rule.weights)
    rhs = float(np.dot(w, means))
    rhs_se = float(np.sqrt(np.dot(w**2, np.square(ses))))
    exact = float(np.dot(w, classical_hitting_laplace_exact(theta, q, x * np.asarray(rule.nodes))))
    return HittingCheck(lhs.value, lhs.stderr, rhs, rhs_se, exact)


@dataclass(frozen=True)
class PipelineKS:
    statistic: float
    pvalue: float
    lamperti_vs_law: float
    sde_vs_law: float


def classical_pipeline_ks(theta: float, x0: float, t: float, cfg: PathConfig, sde_dt: float = 1e-4,
                          threads: int = 1) -> PipelineKS:
    """Two-sample KS distance between the restarted Lamperti route and the Euler SDE at time t.

    Both routes are also compared with the exact law for diagnostics.
    """
    lev = _levy_params(classical_model(theta))
    R = cfg.replicas
    lam = np.empty(R)
    args = (*lev, float(x0), float(t), cfg.eps_absorb, cfg.dt, cfg.max_step, _max_steps(cfg, math.expm1(t) * 10),
            cfg.seed, _TAG_RESTART_VALUE)
    _run(_restart_value_kernel, args, R, threads, lam)
    if np.isnan(lam).any():
        raise ClockOverrun("a restarted replica did not reach the target time")
    n = max(1, int(round(t / sde_dt)))
    sde = np.empty(R)
    _run(_classical_value_kernel, (float(theta), float(x0), n, t / n, cfg.seed, _TAG_CLASSICAL_VALUE), R, threads, sde)
    res = stats.ks_2samp(lam, sde)
    cdf = classical_law_cdf(theta, x0, t)
    return PipelineKS(
        statistic=float(res.statistic),
        pvalue=float(res.pvalue),
        lamperti_vs_law=float(stats.kstest(lam, cdf).statistic),
        sde_vs_law=float(stats.kstest(sde, cdf).statistic),
    )

