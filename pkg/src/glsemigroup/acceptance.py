"""The acceptance suite: thirteen numbered checks with their tolerances and time budgets.

Each check returns a :class:`CriterionResult`; :func:`run_acceptance` runs
them in order.  The Monte Carlo check (12) is the expensive one; check 13
reruns it with a different thread count and compares bit for bit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .bernstein import classical_model, log_wphi, wphi_residual
from .distributions import density_integral, density_m, log_moment
from .intertwining import verify_intertwining
from .localtime_krein import krein_atoms, krein_reconstruction, phi_subordinator, revuz_constants
from .models import model_c, model_j
from .montecarlo import (
    KilledSemigroup,
    PathConfig,
    StationaryMoment,
    classical_pipeline_ks,
    estimate,
    hitting_intertwining_check,
)
from .polys import MP, Poly, ThetaShiftedPoly
from .spectral import (
    apply_semigroup,
    c_n,
    convergence_check,
    eigenpoly,
    inner_m,
    laguerre,
    spectral_model,
    stationary_mean,
)

__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "run_acceptance", "format_report", "MonteCarloSettings"]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float
    budget: float
    data: dict = field(default_factory=dict, repr=False)

    @property
    def within_budget(self) -> bool:
        return self.seconds <= self.budget

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        timing = f"{self.seconds:.2f}s/{self.budget:g}s" + ("" if self.within_budget else " OVER BUDGET")
        return f"[{status}] {self.number:2d}. {self.name}: {self.detail} ({timing})"


def _random_polys(rng, count, degree):
    return [Poly(tuple(rng.uniform(-1, 1, degree + 1))) for _ in range(count)]


def _rel_dev(a: Poly, b: Poly) -> float:
    n = max(len(a.coeffs), len(b.coeffs))
    ca = a.coeffs + (MP.zero,) * (n - len(a.coeffs))
    cb = b.coeffs + (MP.zero,) * (n - len(b.coeffs))
    scale = max(abs(c) for c in cb)
    return float(max(abs(x - y) for x, y in zip(ca, cb)) / scale)


# -- 1 to 11: exact engine ----------------------------------------------------------


def _classical_reduction(seed):
    worst = 0.0
    for theta in (0.25, 0.5, 0.75):
        m = classical_model(theta)
        for n in range(11):
            target = laguerre(m, n, "L").scale(c_n(-theta, n))
            worst = max(worst, _rel_dev(eigenpoly(m, n, "P"), target))
    return worst < 1e-10, f"max rel coefficient deviation {worst:.2e} (tol 1e-10)", {"deviation": worst}


def _gamma_factorization(seed):
    worst = 0.0
    for m in (model_c(), model_j()):
        theta = m.theta
        for n in range(41):
            log_prod = log_moment(m, "V_psi", n) + log_moment(m, "I_phi", n)
            log_target = gammaln(n + 1 - theta) - gammaln(1 - theta)
            worst = max(worst, abs(math.expm1(log_prod - log_target)))
    return worst < 1e-10, f"max rel error {worst:.2e} (tol 1e-10)", {"error": worst}


def _wphi(seed):
    points = [0.25, 0.75, 1.5, 2.5, 0.5 + 5j]
    res = max(wphi_residual(m, z) for m in (model_c(), model_j()) for z in points)
    xs = np.linspace(0.15, 9.65, 20)
    gam = float(np.max(np.abs(np.exp(log_wphi(model_c(), xs) - gammaln(xs)) - 1)))
    ok = res < 1e-8 and gam < 1e-9
    return ok, f"residual {res:.2e} (tol 1e-8); |W/Gamma - 1| {gam:.2e} on MODEL-C (tol 1e-9)", {"residual": res, "gamma": gam}


def _biorthogonality(seed):
    worst = 0.0
    for m in (model_c(), model_j()):
        sm = spectral_model(m)
        for engine in (sm.P, sm.P_up):
            for mm in range(16):
                p = engine.eigenpoly(mm)
                for n in range(16):
                    val = MP.fsum(a * engine.pairing(k, n) for k, a in enumerate(p.coeffs))
                    worst = max(worst, float(abs(val - (1 if mm == n else 0))))
    return worst < 1e-8, f"max |<P_m, m_n> - delta_mn| {worst:.2e} over both systems (tol 1e-8)", {"error": worst}


def _intertwining(seed):
    rng = np.random.default_rng(seed)
    m = model_j()
    worst = 0.0
    for f in _random_polys(rng, 50, 10):
        g = ThetaShiftedPoly(f, m.theta)
        for t in (0.1, 1.0, 5.0):
            worst = max(worst, verify_intertwining(m, f, t), verify_intertwining(m, g, t, killed=True))
    return worst < 1e-10, f"max coefficient deviation {worst:.2e} over 300 checks (tol 1e-10)", {"deviation": worst}


def _semigroup_laws(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for m in (model_c(), model_j()):
        theta = m.theta
        for n in range(16):
            for t in (0.3, 2.0):
                p = eigenpoly(m, n, "P")
                worst = max(worst, _rel_dev(apply_semigroup(m, p, t, "P"), p.scale(MP.exp(-n * MP.mpf(t)))))
                pd = eigenpoly(m, n, "P_dag")
                got = apply_semigroup(m, pd, t, "P_dag").poly
                worst = max(worst, _rel_dev(got, pd.poly.scale(MP.exp(-(n + MP.mpf(theta)) * MP.mpf(t)))))
        for f in _random_polys(rng, 10, 8):
            two = apply_semigroup(m, apply_semigroup(m, f, 0.4, "P"), 0.9, "P")
            worst = max(worst, _rel_dev(two, apply_semigroup(m, f, 1.3, "P")))
            mean_f = stationary_mean(m, f)
            mean_pf = stationary_mean(m, apply_semigroup(m, f, 0.7, "P"))
            worst = max(worst, float(abs(mean_pf - mean_f) / max(abs(mean_f), 1)))
        one = apply_semigroup(m, Poly((1,)), 1.7, "P")
        worst = max(worst, _rel_dev(one, Poly((1,))))
    return worst < 1e-10, f"max deviation {worst:.2e} (tol 1e-10)", {"deviation": worst}


def _bessel(seed):
    rng = np.random.default_rng(seed)
    m = model_j()
    sm = spectral_model(m)
    theta = m.theta
    worst = -math.inf
    ratio = 0.0
    n_max = 30
    for f in _random_polys(rng, 50, 8):
        norm2 = inner_m(m, f, f)
        eig = MP.zero
        co = MP.zero
        for n in range(n_max + 1):
            eig += sm.P.inner(f, sm.P.eigenpoly(n)) ** 2 / c_n(-theta, n)
            pair = MP.fsum(a * sm.P.pairing(k, n) for k, a in enumerate(f.coeffs))
            co += c_n(m.frakb, n) * pair**2
            worst = max(worst, float(max(eig, co) - norm2))
            ratio = max(ratio, float(max(eig, co) / norm2))
    ok = worst <= 1e-8
    detail = f"max partial sum / ||f||^2 = {ratio:.4f}, max excess {worst:.3e} (tol 1e-8), N <= {n_max}"
    return ok, detail, {"excess": worst, "ratio": ratio}


def _convergence(seed):
    rng = np.random.default_rng(seed)
    m = model_j()
    violations = 0
    worst = 0.0
    const = None
    for f in _random_polys(rng, 50, 8):
        for t in (0.25, 1.0, 4.0):
            rep = convergence_check(m, f, t)
            violations += rep.violated
            worst = max(worst, rep.ratio)
            const = rep.constant
    ok = violations == 0 and abs(const - 1.444225) < 5e-6
    return ok, f"{violations} violations, constant {const:.6f}, max lhs/rhs {worst:.4f}", {"violations": violations}


def _phi_identities(seed):
    mc, mj = model_c(), model_j()
    theta = mj.theta
    q = np.geomspace(0.01, 100, 100)
    e1 = abs(float(phi_subordinator("X_laguerre", mj, 1.0)) - theta)
    ratio = phi_subordinator("X_laguerre", mj, q + 1) / phi_subordinator("X_laguerre", mj, q)
    e2 = float(np.max(np.abs(ratio / ((q + theta) / q) - 1)))
    e3 = float(np.max(np.abs(phi_subordinator("X_laguerre", mc, q) - phi_subordinator("X_laguerre", mj, q))))
    try:
        revuz_constants(mj, q_grid=q[::10], tol=1e-8)
        revuz_constants(mc, q_grid=q[::10], tol=1e-8)
        e4 = "ok"
    except AssertionError as exc:
        e4 = str(exc)
    ok = e1 < 1e-12 and e2 < 1e-12 and e3 == 0.0 and e4 == "ok"
    return ok, f"|Phi(1)-theta| {e1:.1e}, ratio {e2:.1e}, models differ by {e3:.1e}, Revuz {e4}", {}


def _krein(seed):
    theta = 0.5
    q = np.linspace(0.1, 10, 25)
    exact = phi_subordinator("X_laguerre", None, q, theta=theta)
    approx = np.array([krein_reconstruction(theta, float(v)) for v in q])
    err = float(np.max(np.abs(approx / exact - 1)))
    locations = np.array([a for a, _ in krein_atoms(theta, 10_000)])
    support_ok = bool(np.array_equal(locations, np.arange(10_001) + theta))
    # the same numbers are the decay rates of the killed eigenfunctions
    m = model_c()
    rate_err = 0.0
    for n in range(11):
        pd = eigenpoly(m, n, "P_dag")
        out = apply_semigroup(m, pd, 1.0, "P_dag").poly
        rate = -MP.log(out.coeffs[0] / pd.poly.coeffs[0])
        rate_err = max(rate_err, float(abs(rate - locations[n])))
    ok = err < 1e-3 and support_ok and rate_err < 1e-12
    return ok, f"max rel error {err:.2e} (tol 1e-3); support = {{n+theta}}: {support_ok}; rate match {rate_err:.1e}", {}


def _density(seed):
    x = np.linspace(0.1, 10, 200)
    got = density_m(model_c(), x)
    want = stats.gamma(0.5).pdf(x)
    sup = float(np.max(np.abs(got - want)))
    mass = density_integral(model_j(), 0)
    ok = sup < 1e-6 and abs(mass - 1) < 1e-6
    return ok, f"sup error vs Gamma(1/2) {sup:.2e} (tol 1e-6); MODEL-J mass {mass:.9f}", {"sup": sup, "mass": mass}


# -- 12 and 13: simulation ----------------------------------------------------------


@dataclass(frozen=True)
class MonteCarloSettings:
    replicas: int = 100_000
    ks_replicas: int = 10_000
    stationary_replicas: int = 256
    dt: float = 2e-3
    sde_ks_dt: float = 1e-4
    sde_hit_dt: float = 1e-3
    eps_killed: float = 1e-10
    eps_ks: float = 1e-6
    eps_stationary: float = 1e-3
    horizon: float = 200.0


def _monte_carlo(seed, threads=1, settings: MonteCarloSettings | None = None):
    s = settings or MonteCarloSettings()
    mj = model_j()
    theta = mj.theta
    numbers = {}
    parts = []

    ks_cfg = PathConfig(dt=s.dt, eps_absorb=s.eps_ks, seed=seed, replicas=s.ks_replicas)
    ks_ok = True
    for t in (1.0, 0.5):
        ks = classical_pipeline_ks(0.5, 1.0, t, ks_cfg, sde_dt=s.sde_ks_dt, threads=threads)
        numbers[f"ks_t{t}"] = (ks.statistic, ks.lamperti_vs_law, ks.sde_vs_law)
        ks_ok &= ks.statistic < 0.02
        parts.append(f"(a) t={t}: KS {ks.statistic:.4f}")

    cfg = PathConfig(dt=s.dt, eps_absorb=s.eps_killed, seed=seed, replicas=s.replicas)
    f = ThetaShiftedPoly(Poly((1,)), theta)
    est = estimate(mj, KilledSemigroup(f, 1.0, 1.0), cfg, threads)
    exact = math.exp(-theta)
    z_b = (est.value - exact) / est.stderr
    numbers["killed"] = (est.value, est.stderr)
    parts.append(f"(b) {est.value:.5f}+-{est.stderr:.5f} vs {exact:.6f} (z={z_b:+.2f})")

    st_cfg = PathConfig(dt=s.dt, horizon=s.horizon, eps_absorb=s.eps_stationary, seed=seed,
                        replicas=s.stationary_replicas)
    st = estimate(mj, StationaryMoment(2), st_cfg, threads)
    target = math.exp(log_moment(mj, "V_psi", 2))
    rel_c = st.value / target - 1
    numbers["stationary"] = (st.value, st.stderr)
    parts.append(f"(c) {st.value:.4f}+-{st.stderr:.4f} vs {target:.6f} ({100 * rel_c:+.2f}%)")

    sde_cfg = PathConfig(dt=s.sde_hit_dt, eps_absorb=s.eps_killed, seed=seed, replicas=s.replicas)
    hit = hitting_intertwining_check(mj, 1.0, 1.0, cfg, sde_cfg, threads=threads)
    numbers["hitting"] = (hit.lhs, hit.lhs_se, hit.rhs, hit.rhs_se, hit.rhs_exact)
    parts.append(f"(d) {hit.lhs:.5f}+-{hit.lhs_se:.5f} vs {hit.rhs:.5f}+-{hit.rhs_se:.5f} (z={hit.z:+.2f})")

    ok = ks_ok and abs(z_b) <= 3 and abs(rel_c) <= 0.05 and hit.passed
    return ok, "; ".join(parts), numbers


CRITERIA = [
    (1, "classical reduction", _classical_reduction, 1.0),
    (2, "Gamma factorization", _gamma_factorization, 1.0),
    (3, "W_phi functional equation", _wphi, 5.0),
    (4, "biorthogonality", _biorthogonality, 5.0),
    (5, "intertwining", _intertwining, 10.0),
    (6, "eigen and semigroup laws", _semigroup_laws, 5.0),
    (7, "Bessel bounds", _bessel, 5.0),
    (8, "convergence bound", _convergence, 5.0),
    (9, "Phi identities", _phi_identities, 1.0),
    (10, "Krein reconstruction", _krein, 10.0),
    (11, "density inversion", _density, 30.0),
    (12, "Monte Carlo cross-validation", _monte_carlo, 300.0),
]


def run_criterion(number: int, seed: int = 20240601, threads: int = 1, mc_settings: MonteCarloSettings | None = None):
    if number == 13:
        raise ValueError("criterion 13 needs the result of 12; use run_acceptance")
    num, name, func, budget = CRITERIA[number - 1]
    start = time.perf_counter()
    if num == 12:
        ok, detail, data = func(seed, threads, mc_settings)
    else:
        ok, detail, data = func(seed)
    return CriterionResult(num, name, bool(ok), detail, time.perf_counter() - start, budget, data)


def _determinism(first: CriterionResult, seed, threads, mc_settings):
    other = 1 if threads > 1 else 4
    start = time.perf_counter()
    _, _, numbers = _monte_carlo(seed, other, mc_settings)
    same = numbers == first.data
    detail = f"threads {threads} vs {other}: {'bit-identical' if same else 'DIFFERENT'}"
    return CriterionResult(13, "determinism", same, detail, time.perf_counter() - start, math.inf, numbers)


def run_acceptance(seed: int = 20240601, threads: int = 1, only=None, mc_settings: MonteCarloSettings | None = None,
                   report=None) -> list:
    """Run the selected criteria (default all 13); ``report`` is called with each result as it completes."""
    wanted = set(only) if only else set(range(1, 14))
    results = []
    mc = None
    for num in range(1, 13):
        if num in wanted or (num == 12 and 13 in wanted):
            res = run_criterion(num, seed, threads, mc_settings)
            if num == 12:
                mc = res
            if num in wanted:
                results.append(res)
                if report:
                    report(res)
    if 13 in wanted:
        res = _determinism(mc, seed, threads, mc_settings)
        results.append(res)
        if report:
            report(res)
    return results


def format_report(results) -> str:
    lines = [r.line() for r in results]
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} criteria passed")
    return "\n".join(lines)

