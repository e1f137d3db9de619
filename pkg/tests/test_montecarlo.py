import math

import numpy as np
import pytest
from scipy import stats

from glsemigroup import LevyQuadruplet, apply_semigroup, moments
from glsemigroup.errors import ClockOverrun, DomainError
from glsemigroup.montecarlo import (
    HittingLaplace,
    KilledSemigroup,
    PathConfig,
    PathSample,
    StationaryMoment,
    classical_hitting_laplace_exact,
    classical_law_cdf,
    classical_pipeline_ks,
    classical_sde_hitting_laplace,
    estimate,
    hitting_intertwining_check,
    lamperti_path,
    laguerre_path,
    restart_path,
    sample_observable,
    simulate_classical,
    simulate_levy,
)
from glsemigroup.montecarlo import _levy_params
from glsemigroup.polys import Poly, ThetaShiftedPoly

SEED = 7
LN2 = math.log(2.0)


def within(est, exact, k=3.0):
    return abs(est.value - exact) <= k * est.stderr


def test_path_config_validation():
    with pytest.raises(DomainError):
        PathConfig(dt=0)
    with pytest.raises(DomainError):
        PathConfig(horizon=-1)
    with pytest.raises(DomainError):
        PathConfig(eps_absorb=0)
    with pytest.raises(DomainError):
        PathConfig(replicas=0)
    with pytest.raises(DomainError):
        PathConfig(seed=-1)
    with pytest.raises(DomainError):
        PathConfig(dt=0.5, max_step=0.25)


def test_pathwise_drift(mj, mc):
    assert _levy_params(mj).drift == pytest.approx(1.5 - math.sqrt(2) - LN2 + LN2, rel=1e-14)
    assert _levy_params(mj).drift == pytest.approx(0.085786, abs=1e-6)
    assert _levy_params(mc).drift == -0.5


def test_levy_zero_horizon_is_empty(mj):
    path = simulate_levy(mj, PathConfig(horizon=0.0))
    assert path.times.size == 0 and path.states.size == 0


def _endpoints(model, n, seed=SEED):
    # increments are exact in law, so a coarse grid samples xi_1 exactly
    cfg = PathConfig(dt=0.25, horizon=1.0, seed=seed)
    return np.array([simulate_levy(model, cfg, r).states[-1] for r in range(n)])


def test_levy_mean_is_beta(mj):
    x = _endpoints(mj, 100_000)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - mj.quad.beta) < 3 * se


def test_levy_classical_law(mc):
    x = _endpoints(mc, 20_000)
    n = x.size
    var_se = math.sqrt(2.0 / (n - 1)) * 2.0
    assert abs(x.var(ddof=1) - 2.0) < 3 * var_se
    assert stats.kstest(x, stats.norm(-0.5, math.sqrt(2.0)).cdf).pvalue > 1e-3


def test_levy_jump_law_model_j(mj):
    # xi_1 - b - sigma W_1 = -ln2 * Poisson(1): check the lattice through the mgf E[e^{z xi_1}] = e^{psi(z)}
    x = _endpoints(mj, 100_000)
    for z in (0.5, 1.0):
        m = np.exp(z * x)
        se = m.std(ddof=1) / math.sqrt(m.size)
        assert abs(m.mean() - math.exp(float(mj.psi(z)))) < 3 * se


def test_levy_path_reproducible(mj):
    cfg = PathConfig(dt=1e-2, horizon=2.0, seed=SEED)
    a = simulate_levy(mj, cfg, 3)
    b = simulate_levy(mj, cfg, 3)
    c = simulate_levy(mj, cfg, 4)
    assert np.array_equal(a.states, b.states)
    assert not np.array_equal(a.states, c.states)


def test_lamperti_constant_path():
    flat = LevyQuadruplet(beta=0.0, sigma2=0.0)
    levy = simulate_levy(flat, PathConfig(dt=1e-2, horizon=5.0))
    xbar = lamperti_path(levy, 2.5)
    assert np.all(xbar.states == 2.5)
    for t in (0.0, 1.0, 7.3, 12.5):
        assert xbar.value_at(t) == 2.5
    with pytest.raises(ClockOverrun):
        xbar.value_at(12.6)


def test_lamperti_linear_drift_clock():
    lin = LevyQuadruplet(beta=1.0, sigma2=0.0)
    levy = simulate_levy(lin, PathConfig(dt=1e-3, horizon=4.0))
    x0 = 1.7
    xbar = lamperti_path(levy, x0)
    for t in (0.1, 1.0, 10.0, 50.0):
        assert xbar.value_at(t) == pytest.approx(x0 * (1 + t / x0), rel=1e-6)


def test_lamperti_rejects_bad_start(mj):
    levy = simulate_levy(mj, PathConfig(dt=1e-2, horizon=1.0))
    with pytest.raises(DomainError):
        lamperti_path(levy, 0.0)


def _xbar_p1(model, x0, t, n, seed):
    cfg = PathConfig(dt=2e-2, horizon=200.0, seed=seed)
    vals = np.empty(n)
    for r in range(n):
        vals[r] = lamperti_path(simulate_levy(model, cfg, r), x0, eps_absorb=1e-6).value_at(t)
    return vals


def test_lamperti_self_similarity(mj):
    c, t = 2.0, 1.0
    scaled = c * _xbar_p1(mj, 1.0, t / c, 3000, SEED)
    direct = _xbar_p1(mj, c, t, 3000, SEED + 1)
    se = math.hypot(scaled.std(ddof=1), direct.std(ddof=1)) / math.sqrt(3000)
    assert abs(scaled.mean() - direct.mean()) < 3 * se


def test_laguerre_path_of_constant():
    times = np.linspace(0, math.expm1(3.0), 50)
    xbar = PathSample(times, np.full(times.size, 1.5), log_interp=True)
    x = laguerre_path(xbar, horizon=3.0)
    assert np.allclose(x.states, 1.5 * np.exp(-x.times), rtol=1e-14)
    assert x.value_at(2.0) == pytest.approx(1.5 * math.exp(-2.0), rel=1e-3)
    with pytest.raises(ClockOverrun):
        laguerre_path(xbar, horizon=3.5)


def test_restart_path_covers_horizon(mj):
    cfg = PathConfig(dt=1e-3, horizon=5.0, eps_absorb=1e-3, seed=SEED)
    path = restart_path(mj, cfg, 1.0)
    assert path.times[-1] >= cfg.horizon
    assert np.all(path.states >= 0)
    assert np.all(np.diff(path.times) >= 0)
    assert path.meta["segments"] >= 1  # it does restart, and does not stall at eps


def test_classical_path_start_and_positivity():
    cfg = PathConfig(dt=1e-3, horizon=0.0)
    assert simulate_classical(0.5, cfg, 1.3).states.tolist() == [1.3]
    path = simulate_classical(0.5, PathConfig(dt=1e-3, horizon=2.0, seed=SEED), 0.2)
    assert np.all(path.states >= 0)


def _classical_endpoints(t, n, x0, dt):
    cfg = PathConfig(dt=dt, horizon=t, seed=SEED)
    return np.array([simulate_classical(0.5, cfg, x0, r).states[-1] for r in range(n)])


def test_classical_mean_at_one():
    x = _classical_endpoints(1.0, 4000, 1.0, 1e-3)
    want = math.exp(-1) + (1 - math.exp(-1)) * 0.5
    assert abs(x.mean() - want) < 3 * x.std(ddof=1) / math.sqrt(x.size)
    # the same number from the exact spectral engine with psi_Y
    from glsemigroup import model_c

    exact = apply_semigroup(model_c(), Poly((0, 1)), 1.0, "Q")
    assert float(exact(1.0)) == pytest.approx(want, rel=1e-14)


def test_classical_stationary_mean():
    # reflected Euler overshoots the mean by about 0.05 at dt = 1e-2
    x = _classical_endpoints(10.0, 4000, 1.0, 1e-3)
    assert abs(x.mean() - 0.5) < 3 * x.std(ddof=1) / math.sqrt(x.size)


def test_classical_law_cdf_matches_gamma_limit():
    # at large t the law forgets x0 and becomes Gamma(1 - theta)
    cdf = classical_law_cdf(0.5, 2.0, 30.0)
    x = np.array([0.1, 0.5, 2.0])
    assert np.allclose(cdf(x), stats.gamma(0.5).cdf(x), atol=1e-8)


def test_pipeline_routes_match_exact_law():
    cfg = PathConfig(dt=2e-3, eps_absorb=1e-6, replicas=3000, seed=SEED)
    res = classical_pipeline_ks(0.5, 1.0, 0.5, cfg, sde_dt=1e-4)
    n = cfg.replicas
    # one-sample KS critical value at level 1e-3 is about 1.95 / sqrt(n)
    assert res.lamperti_vs_law < 1.95 / math.sqrt(n)
    assert res.sde_vs_law < 1.95 / math.sqrt(n)
    assert res.statistic < 1.95 * math.sqrt(2 / n) * 1.0


def test_killed_semigroup_theta_function(mj):
    f = ThetaShiftedPoly(Poly((1,)), mj.theta)
    cfg = PathConfig(dt=2e-3, eps_absorb=1e-10, replicas=20_000, seed=SEED)
    assert within(estimate(mj, KilledSemigroup(f, 1.0, 1.0), cfg), math.exp(-0.5))


@pytest.mark.parametrize("t", [0.5, 1.0])
def test_killed_semigroup_matches_exact_engine(model, t):
    f = ThetaShiftedPoly(Poly((0, 1)), model.theta)
    exact = float(apply_semigroup(model, f, t, "P_dag")(1.0))
    cfg = PathConfig(dt=2e-3, eps_absorb=1e-10, replicas=10_000, seed=SEED)
    assert within(estimate(model, KilledSemigroup(f, 1.0, t), cfg), exact)


def test_killed_semigroup_at_time_zero(mj):
    f = ThetaShiftedPoly(Poly((1, 2)), mj.theta)
    cfg = PathConfig(replicas=10)
    est = estimate(mj, KilledSemigroup(f, 2.0, 0.0), cfg)
    assert est.value == pytest.approx(float(f(2.0)), rel=1e-14) and est.stderr == 0.0


def test_hitting_laplace_classical_exact(mc):
    cfg = PathConfig(dt=2e-3, eps_absorb=1e-10, replicas=10_000, seed=SEED)
    est = estimate(mc, HittingLaplace(1.0, 1.0), cfg)
    assert within(est, float(classical_hitting_laplace_exact(0.5, 1.0, 1.0)))


def test_classical_hitting_exact_is_eigenfunction():
    # x f'' + (1 - theta - x) f' = q f with f(0) = 1
    theta, q = 0.5, 1.3
    x = np.array([0.3, 1.0, 2.5])
    h = 1e-3  # at 1e-4 roundoff in f over h^2 dominates
    f = lambda y: classical_hitting_laplace_exact(theta, q, y)  # noqa: E731
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h) - 2 * f(x) + f(x - h)) / h**2
    assert np.allclose(x * d2 + (1 - theta - x) * d1, q * f(x), rtol=1e-5)
    assert float(f(1e-12)) == pytest.approx(1.0, abs=1e-5)


def test_hitting_laplace_monotone(mj):
    cfg = PathConfig(dt=2e-3, eps_absorb=1e-8, replicas=4000, seed=SEED)
    vals = sample_observable(mj, HittingLaplace(0.5, 1.0), cfg)
    times = -np.log(vals) / 0.5
    by_q = [np.mean(np.exp(-q * times)) for q in (0.25, 0.5, 1.0, 2.0)]
    assert all(0 < v < 1 for v in by_q)
    assert all(a > b for a, b in zip(by_q, by_q[1:]))
    near = estimate(mj, HittingLaplace(1.0, 0.5), cfg)
    far = estimate(mj, HittingLaplace(1.0, 2.0), cfg)
    assert near.value > far.value + 3 * math.hypot(near.stderr, far.stderr)


def test_hitting_eps_sensitivity(mj):
    base = PathConfig(dt=2e-3, eps_absorb=1e-8, replicas=10_000, seed=SEED)
    half = PathConfig(dt=2e-3, eps_absorb=5e-9, replicas=10_000, seed=SEED)
    a = estimate(mj, HittingLaplace(1.0, 1.0), base)
    b = estimate(mj, HittingLaplace(1.0, 1.0), half)
    assert abs(a.value - b.value) < 2 * max(a.stderr, b.stderr)


def test_stationary_first_moment(mj):
    cfg = PathConfig(dt=2e-3, horizon=200.0, eps_absorb=1e-3, replicas=32, seed=SEED)
    est = estimate(mj, StationaryMoment(1.0), cfg)
    target = moments(mj, "V_psi", 1)
    assert abs(est.value / target - 1) < 0.05


def test_determinism_across_threads(mj):
    cfg = PathConfig(dt=2e-3, eps_absorb=1e-10, replicas=1500, seed=SEED)
    obs = HittingLaplace(1.0, 1.0)
    one = sample_observable(mj, obs, cfg, threads=1)
    three = sample_observable(mj, obs, cfg, threads=3)
    assert np.array_equal(one, three)
    f = ThetaShiftedPoly(Poly((1,)), mj.theta)
    assert estimate(mj, KilledSemigroup(f, 1.0, 1.0), cfg, 1) == estimate(mj, KilledSemigroup(f, 1.0, 1.0), cfg, 2)


def test_replica_prefix_property(mj):
    obs = HittingLaplace(1.0, 1.0)
    small = sample_observable(mj, obs, PathConfig(dt=2e-3, replicas=700, seed=SEED))
    large = sample_observable(mj, obs, PathConfig(dt=2e-3, replicas=1100, seed=SEED))
    assert np.array_equal(small, large[:700])


def test_sde_hitting_schemes():
    cfg = PathConfig(dt=1e-3, eps_absorb=1e-8, replicas=8000, seed=SEED)
    exact = float(classical_hitting_laplace_exact(0.5, 1.0, 1.0))
    assert within(classical_sde_hitting_laplace(0.5, 1.0, 1.0, cfg), exact)
    with pytest.raises(DomainError):
        classical_sde_hitting_laplace(0.5, 1.0, 1.0, cfg, scheme="heun")


def test_hitting_intertwining_small(mj):
    cfg = PathConfig(dt=2e-3, eps_absorb=1e-10, replicas=8000, seed=SEED)
    sde = PathConfig(dt=1e-3, replicas=8000, seed=SEED)
    check = hitting_intertwining_check(mj, 1.0, 1.0, cfg, sde, nodes=4)
    assert check.passed
    assert abs(check.rhs - check.rhs_exact) < 3 * check.rhs_se
    assert abs(check.lhs - check.rhs_exact) < 3 * check.lhs_se + 1e-3


def test_unknown_observable(mj):
    with pytest.raises(DomainError):
        sample_observable(mj, "mean", PathConfig(replicas=2))
