import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from gendyn.dynamics import DynamicsParams, learning_curves, mode_ode_rhs, s_of_t, t_of_s, transition_time
from gendyn.errors import NonPositiveMode


def ode_oracle(times, shat, eps, depth, tau=1.0):
    k = depth - 1
    rhs = lambda t, u: k * u ** (2 - 2 / k) * (shat - u) / tau  # noqa: E731
    sol = solve_ivp(rhs, (0, max(times)), [eps], t_eval=times, rtol=1e-12, atol=1e-15, method="LSODA")
    return sol.y[0]


def test_s_of_t_examples():
    d = DynamicsParams(0.01)
    assert s_of_t(0.0, 3.0, d) == pytest.approx(0.01, rel=1e-12)
    assert s_of_t(np.inf, 3.0, d) == pytest.approx(3.0)
    assert s_of_t(np.log(299) / 6, 3.0, d) == pytest.approx(1.5, abs=1e-12)


def test_t_of_s_examples():
    d = DynamicsParams(0.01)
    assert t_of_s(0.01, 3.0, d) == pytest.approx(0.0, abs=1e-14)
    assert t_of_s(0.999 * 3, 3.0, d) > t_of_s(0.99 * 3, 3.0, d)
    # beyond t ~ 3 the gap shat - s falls toward rounding level and t is no longer recoverable
    t = np.linspace(0, 3, 31)
    np.testing.assert_allclose(t_of_s(s_of_t(t, 3.0, d), 3.0, d), t, atol=1e-9)
    s = np.linspace(0.01, 2.999, 50)
    np.testing.assert_allclose(s_of_t(t_of_s(s, 3.0, d), 3.0, d), s, rtol=1e-12)


def test_transition_time_examples():
    d = DynamicsParams(0.01)
    assert transition_time(3.0, d) == pytest.approx(np.log(299) / 6, abs=1e-4)
    assert transition_time(6.0, d) < transition_time(2.0, d)


def test_rhs_examples():
    d3, d5 = DynamicsParams(0.01), DynamicsParams(0.01, depth=5)
    assert mode_ode_rhs(0.7, 2.0, d3) == pytest.approx(2 * 0.7 * 1.3)
    assert mode_ode_rhs(2.0, 2.0, d5) == 0.0
    assert mode_ode_rhs(1.0, 2.0, d5) == pytest.approx(4.0)


@pytest.mark.parametrize("depth", [4, 5, 7])
@pytest.mark.parametrize("shat", [0.3, 1.0, 4.0])
def test_deep_curves_match_ode(depth, shat):
    eps = 1e-3
    t_end = 3 * transition_time(shat, DynamicsParams(eps, depth=depth))
    times = np.linspace(0, t_end, 60)
    got = learning_curves(times, [shat], DynamicsParams(eps, depth=depth))[:, 0]
    np.testing.assert_allclose(got, ode_oracle(times, shat, eps, depth), rtol=1e-7, atol=1e-12)


def test_depth5_s_of_t_matches_ode():
    d = DynamicsParams(1e-3, depth=5)
    times = np.linspace(0, 3 * transition_time(2.0, d), 30)
    np.testing.assert_allclose(s_of_t(times, 2.0, d), ode_oracle(times, 2.0, 1e-3, 5), rtol=1e-8)


def test_learning_curves_handles_bulk_modes():
    d = DynamicsParams(0.1)
    out = learning_curves([0.0, 1.0, np.inf], [0.0, 0.05, 2.0], d)
    assert out[0] == pytest.approx([0.1, 0.1, 0.1])
    assert out[1, 0] == pytest.approx(0.1 / 1.2)  # pure decay
    assert 0.05 < out[1, 1] < 0.1
    assert out[2] == pytest.approx([0.0, 0.05, 2.0])
    deep = learning_curves([0.0, 5.0], [0.0, 0.05], DynamicsParams(0.1, depth=5))
    assert np.all(np.diff(deep, axis=0) < 0)


def test_tau_rescales_time():
    a = learning_curves([2.0], [1.5], DynamicsParams(1e-3, tau=2.0, depth=5))
    b = learning_curves([1.0], [1.5], DynamicsParams(1e-3, tau=1.0, depth=5))
    assert a == pytest.approx(b, rel=1e-10)


def test_validation():
    with pytest.raises(ValueError):
        DynamicsParams(0.0)
    with pytest.raises(ValueError):
        DynamicsParams(0.1, depth=2)
    with pytest.raises(NonPositiveMode):
        s_of_t(1.0, 0.0, DynamicsParams(0.1))


@settings(max_examples=150, deadline=None)
@given(shat=st.floats(0.05, 10.0), log_eps=st.floats(-6, -2), frac=st.floats(0.0, 1.0), depth=st.sampled_from([3, 5]))
def test_inverse_round_trip(shat, log_eps, frac, depth):
    d = DynamicsParams(10**log_eps, depth=depth)
    t = frac * 3 * transition_time(shat, d)
    s = s_of_t(t, shat, d)
    if s < shat * (1 - 1e-4):  # t_of_s loses resolution right at the fixed point
        assert t_of_s(s, shat, d) == pytest.approx(t, abs=1e-9 * max(1.0, t))


@settings(max_examples=100, deadline=None)
@given(shat=st.floats(0.05, 10.0), log_eps=st.floats(-6, -2), depth=st.sampled_from([3, 4, 5]))
def test_half_rise_identity(shat, log_eps, depth):
    d = DynamicsParams(10**log_eps, depth=depth)
    if d.eps >= shat / 2:
        return
    assert s_of_t(transition_time(shat, d), shat, d) == pytest.approx(shat / 2, abs=1e-9)
