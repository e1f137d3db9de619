import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gamma

from glsemigroup import (
    Atom,
    ExpDensity,
    LevyQuadruplet,
    build_model,
    classical_model,
    classify,
    derived_exponent,
    find_theta,
    load_model,
    model_from_dict,
    model_to_dict,
    psi_eval,
    wphi,
    wphi_residual,
)
from glsemigroup.errors import DomainError, NoRootInUnitInterval

SQRT2 = math.sqrt(2.0)
LN2 = math.log(2.0)


def test_psi_at_one(mc, mj):
    assert psi_eval(mc, 1.0) == pytest.approx(0.5, rel=1e-15)
    assert psi_eval(mj, 1.0) == pytest.approx(2 - SQRT2, rel=1e-14)


def test_psi_at_two_model_j(mj):
    # 2 beta + 4 + (1/4 - 1 + 2 ln 2)
    beta = 1.5 - SQRT2 - LN2
    assert psi_eval(mj, 2.0) == pytest.approx(2 * beta + 4 + 0.25 - 1 + 2 * LN2, rel=1e-14)
    assert psi_eval(mj, 2.0) == pytest.approx(3.421573, abs=1e-6)


def test_psi_at_zero_is_minus_kappa():
    m = build_model(LevyQuadruplet(beta=0.3, sigma2=1.0, kappa=0.7))
    assert psi_eval(m, 0.0) == -0.7


def test_psi_rejects_left_half_plane(mj):
    with pytest.raises(DomainError):
        psi_eval(mj, -0.1)


def test_psi_complex_argument_classical(mc):
    z = 0.5 + 2j
    assert psi_eval(mc, z) == pytest.approx(z * (z - 0.5), rel=1e-14)


def test_find_theta(mc, mj):
    assert find_theta(mc) == 0.5
    assert find_theta(mj) == pytest.approx(0.5, abs=1e-12)


def test_find_theta_recovers_root_by_search():
    beta = 1.5 - SQRT2 - LN2
    m = build_model(LevyQuadruplet(beta=beta, sigma2=2.0, jumps=(Atom(LN2, 1.0),)))
    assert m.theta == pytest.approx(0.5, abs=1e-12)


def test_find_theta_no_root():
    m = build_model(LevyQuadruplet(beta=1.0, sigma2=2.0))
    with pytest.raises(NoRootInUnitInterval):
        find_theta(m)


def test_supplied_theta_must_be_a_root():
    with pytest.raises(DomainError):
        build_model(LevyQuadruplet(beta=-0.5, sigma2=2.0), theta=0.3)


def test_classify_model_j(mj):
    info = classify(mj)
    assert info["double_tail_zero"] == pytest.approx(LN2, rel=1e-14)
    assert info["frakb"] == pytest.approx((1.5 - SQRT2 - LN2 + LN2) / 2, rel=1e-12)
    assert info["frakb"] == pytest.approx(0.042893, abs=1e-6)
    assert info["flags"]["N_check"] and info["flags"]["N_P"] and info["flags"]["Nbar_inf"]


def test_classify_model_c(mc):
    info = classify(mc)
    assert info["double_tail_zero"] == 0.0
    assert info["frakb"] == -0.25
    assert info["flags"]["N_check"] and info["flags"]["N_P"] and info["flags"]["Nbar_inf"]


def test_double_tail_of_exponential_density():
    m = build_model(LevyQuadruplet(beta=0.0, sigma2=1.0, jumps=(ExpDensity(1.0, 2.0),)))
    assert classify(m)["double_tail_zero"] == pytest.approx(0.25, rel=1e-14)


def test_exponential_density_psi_against_quadrature():
    from scipy.integrate import quad

    dens = ExpDensity(1.5, 3.0)
    m = build_model(LevyQuadruplet(beta=0.2, sigma2=0.5, jumps=(dens,)))
    for z in (0.3, 1.0, 4.0):
        integrand = lambda y: (math.exp(-z * y) - 1 + z * y * (y < 1)) * dens.c * math.exp(-dens.lam * y)  # noqa: E731
        jump = quad(integrand, 0, 1)[0] + quad(integrand, 1, np.inf)[0]
        assert psi_eval(m, z) == pytest.approx(0.2 * z + 0.25 * z * z + jump, rel=1e-10)


def test_invalid_jump_components():
    with pytest.raises(DomainError):
        Atom(0.0, 1.0)
    with pytest.raises(DomainError):
        ExpDensity(1.0, -1.0)
    with pytest.raises(DomainError):
        LevyQuadruplet(beta=0.0, sigma2=-1.0)


def test_derived_exponents(mc, mj):
    assert derived_exponent(mj, "phi", 1.0) == pytest.approx((2 - SQRT2) / 0.5, rel=1e-13)
    assert derived_exponent(mc, "phi", 3.0) == pytest.approx(3.0, rel=1e-14)
    assert derived_exponent(mc, "phi", 0.5) == pytest.approx(0.5, rel=1e-12)
    u = np.linspace(0.0, 5.0, 11)
    assert np.allclose(derived_exponent(mj, "psi_up", u), mj.psi(u + 0.5))
    assert np.allclose(derived_exponent(mj, "phi1", u), mj.psi(u + 1) / (u + 1))
    assert np.allclose(derived_exponent(mj, "t1psi", u), u * mj.psi(u + 1) / (u + 1))
    assert np.allclose(derived_exponent(mj, "phi_up", u), mj.phi(u + 0.5))


def test_derived_exponent_domain(mj):
    with pytest.raises(DomainError):
        derived_exponent(mj, "phi", -1.0)
    with pytest.raises(DomainError):
        derived_exponent(mj, "nope", 1.0)


def test_phi_is_continuous_through_theta(mj):
    # the removable singularity at u = theta
    near = derived_exponent(mj, "phi", np.array([0.5 - 1e-7, 0.5 + 1e-7]))
    at = derived_exponent(mj, "phi", 0.5)
    assert np.allclose(near, at, rtol=1e-6)
    assert at == pytest.approx(mj.dpsi(0.5), rel=1e-12)


def test_psi_convex(model):
    u = np.linspace(0, 20, 1000)
    v = model.psi(u)
    assert np.min(v[2:] - 2 * v[1:-1] + v[:-2]) >= -1e-10


def test_phi_bernstein_on_samples(model):
    u = np.geomspace(1e-2, 1e2, 80)
    h = 0.02 * u
    f = np.array([model.phi(u + j * h) for j in range(-2, 3)])
    assert np.all(f[2] > 0)
    d1 = (f[3] - f[1]) / (2 * h)
    d2 = (f[3] - 2 * f[2] + f[1]) / h**2
    d3 = (f[4] - 2 * f[3] + 2 * f[1] - f[0]) / (2 * h**3)
    d4 = (f[4] - 4 * f[3] + 6 * f[2] - 4 * f[1] + f[0]) / h**4
    for order, d in enumerate((d1, d2, d3, d4), start=1):
        floor = 1e-8 * np.abs(f[2]) / h**order
        assert np.all((-1) ** (order + 1) * d >= -floor)


def test_wphi_classical_is_gamma(mc):
    assert wphi(mc, 1.0) == 1.0
    assert wphi(mc, 2.0) == pytest.approx(1.0, rel=1e-14)
    assert wphi(mc, 3.5) == pytest.approx(gamma(3.5), rel=1e-9)
    assert gamma(3.5) == pytest.approx(3.323351, abs=1e-6)
    z = np.array([0.3, 0.75, 1.5, 4.25, 7.9])
    assert np.allclose(wphi(mc, z), gamma(z), rtol=1e-9)


def test_wphi_integer_product(mj):
    phi1 = (2 - SQRT2) / 0.5
    phi2 = float(psi_eval(mj, 2.0)) / 1.5
    assert wphi(mj, 3.0) == pytest.approx(phi1 * phi2, rel=1e-13)
    assert wphi(mj, 3.0) == pytest.approx(2.672414, abs=1e-6)


def test_wphi_non_integer_matches_neighbouring_integers(mj):
    # W(2.5) = phi(1.5) W(1.5) and W(3.5) = phi(2.5) W(2.5) through one evaluation
    lhs = wphi(mj, 3.5)
    rhs = mj.phi(2.5) * mj.phi(1.5) * wphi(mj, 1.5)
    assert lhs == pytest.approx(rhs, rel=1e-9)


@pytest.mark.parametrize("z", [0.25, 0.75, 1.5, 2.5, 0.5 + 5j])
def test_wphi_residual(model, z):
    assert wphi_residual(model, z) < 1e-8


def test_wphi_log_convex_on_integers(model):
    # W(n+1)/W(n) = phi(n) is nondecreasing, so W(n+1)^2 <= W(n) W(n+2)
    w = np.log([wphi(model, float(n)) for n in range(1, 54)])
    assert np.all(2 * w[1:-1] <= w[:-2] + w[2:] + 1e-12)
    assert np.all(np.diff(np.diff(w)) >= -1e-12)


def test_wphi_domain(mj):
    with pytest.raises(DomainError):
        wphi(mj, -0.5)


@given(st.floats(min_value=0.05, max_value=30.0))
def test_wphi_functional_equation_property(z):
    from glsemigroup import model_j

    m = model_j()
    assert wphi_residual(m, z) < 1e-8


@given(
    beta=st.floats(min_value=-3.0, max_value=-0.05),
    sigma2=st.floats(min_value=0.1, max_value=4.0),
    y=st.floats(min_value=0.05, max_value=3.0),
    w=st.floats(min_value=0.0, max_value=2.0),
)
def test_theta_is_a_root_property(beta, sigma2, y, w):
    jumps = (Atom(y, w),) if w > 0 else ()
    quad = LevyQuadruplet(beta=beta, sigma2=sigma2, jumps=jumps)
    m = build_model(quad)
    if m.theta is None:
        # no sign change: psi keeps one sign on (0, 1]
        assert float(m.psi(1.0)) <= 0 or float(m.psi(1e-6)) >= 0
        return
    assert 0 < m.theta < 1
    assert abs(float(m.psi(m.theta))) < 1e-10 * max(1.0, abs(float(m.dpsi(m.theta))))


def test_model_dict_round_trip(mj, tmp_path):
    data = model_to_dict(mj)
    again = model_from_dict(data)
    assert again.quad == mj.quad
    assert again.theta == pytest.approx(mj.theta, abs=1e-12)
    path = tmp_path / "m.json"
    import json

    path.write_text(json.dumps(data))
    assert load_model(path).quad == mj.quad


def test_model_dict_errors(tmp_path):
    with pytest.raises(DomainError, match="beta"):
        model_from_dict({"sigma2": 1.0})
    with pytest.raises(DomainError, match="jumps\\[0\\]"):
        model_from_dict({"beta": -0.5, "sigma2": 2.0, "jumps": [{"type": "gauss"}]})
    bad = tmp_path / "bad.json"
    bad.write_text('{"beta": -0.5,\n "sigma2": }')
    with pytest.raises(DomainError, match="line 2"):
        load_model(bad)


def test_classical_model_is_cached():
    assert classical_model(0.5) is classical_model(0.5)
