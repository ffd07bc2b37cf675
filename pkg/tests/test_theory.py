import numpy as np
import pytest

from gendyn.dynamics import DynamicsParams
from gendyn.errors import BelowThreshold, ConfigInvalid, RegimeError
from gendyn.harness.experiments import flow_trace, gd_trace, make_cell
from gendyn.rmt import SpectrumParams, overlap
from gendyn.theory import (
    TheoryConfig,
    nongradient_optimal_error,
    optimal_stopping,
    oversampled_equivalent,
    randomized_spectrum_params,
    randomized_train_error,
    rank1_closed_form,
    test_error_curve,
    theory_curves,
    theory_test_error,
    theory_train_error,
    undersampled_test_error,
)

RANK1 = TheoryConfig((3.0,), 100, 50, 50)
RANK3 = TheoryConfig((6.0, 4.0, 2.0), 100, 50, 50)


def one_minus_o2(sbar, a):
    # hand form of the overlap brackets
    x2 = sbar**2
    bu = 1 - a * (1 + x2) / (x2 * (a + x2))
    bv = 1 - (a + x2) / (x2 * (1 + x2))
    return 1 - bu * bv


def test_train_error_vanishes_for_full_rank_student():
    cfg = TheoryConfig((3.0,), 100, 50, 50)
    assert theory_train_error(np.inf, cfg) == pytest.approx(0.0, abs=1e-12)
    assert theory_train_error(200.0, cfg) == pytest.approx(0.0, abs=1e-3)


def test_untrained_errors_are_one():
    cfg = TheoryConfig((3.0,), 100, 50, 50, DynamicsParams(1e-8))
    train, test = theory_curves(np.array([0.0]), cfg)
    assert train[0] == pytest.approx(1.0, abs=1e-4)
    assert test[0] == pytest.approx(1.0, abs=1e-4)


def test_curves_match_ta_flow_at_t5():
    times = (0.0, 5.0)
    sims = [flow_trace((3.0,), 100, 50, 50, 3, 1e-3, s, times) for s in range(10)]
    train, test = theory_curves(np.array(times), RANK1)
    assert np.mean([t.train_errors[1] for t in sims]) == pytest.approx(train[1], abs=0.05)
    assert np.mean([t.test_errors[1] for t in sims]) == pytest.approx(test[1], abs=0.05)


def test_rank1_minimum_is_one_minus_overlap_squared():
    # bulk leakage at the stopping time vanishes as eps -> 0
    cfg = TheoryConfig((3.0,), 100, 50, 50, DynamicsParams(1e-10), finite_size=False)
    _, eps_opt = optimal_stopping(cfg)
    assert eps_opt == pytest.approx(one_minus_o2(3.0, 0.5), rel=5e-3)


def test_asymptotic_test_error_against_direct_limit():
    # t -> inf: every retained mode sits at shat; bulk contributes its mean square
    cfg = TheoryConfig((3.0,), 100, 50, 50, finite_size=False)
    p = SpectrumParams(0.5)
    from gendyn.rmt import shat_of_sbar

    shat = shat_of_sbar(3.0, p)
    o = overlap(3.0, p).o
    direct = ((shat - 3) ** 2 + 2 * shat * 3 * (1 - o) + 49 * 1.0) / 9
    assert theory_test_error(np.inf, cfg) == pytest.approx(direct, rel=1e-6)
    sims = []
    for seed in range(10):
        _, data, _ = make_cell((3.0,), 100, 50, seed)
        sims.append(np.sum((data.sigma31 - data.teacher.w_bar) ** 2) / 9)
    assert theory_test_error(np.inf, RANK1) == pytest.approx(np.mean(sims), rel=0.03)


def test_optimal_stopping_rank1():
    _, eps_opt = optimal_stopping(TheoryConfig((3.0,), 100, 50, 50, DynamicsParams(1e-8)))
    assert eps_opt == pytest.approx(0.158, abs=2e-3)
    _, eps_default = optimal_stopping(RANK1)
    assert eps_default == pytest.approx(0.158, abs=0.01)


def test_optimal_stopping_below_threshold():
    t_opt, eps_opt = optimal_stopping(TheoryConfig((0.5,), 100, 50, 50))
    assert t_opt == 0.0
    assert eps_opt == pytest.approx(1.0, abs=1e-3)


def test_optimal_stopping_rank3_matches_simulation():
    _, eps_opt = optimal_stopping(RANK3)
    times = tuple(np.concatenate([[0.0], np.logspace(-2, 2, 400)]))
    sims = [flow_trace((6.0, 4.0, 2.0), 100, 50, 50, 3, 1e-3, s, times) for s in range(10)]
    sim_opt = np.mean([t.min_test()[1] for t in sims])
    assert eps_opt == pytest.approx(sim_opt, abs=0.02)


def test_rank1_closed_form_examples():
    s_opt, eps_opt, t_opt = rank1_closed_form(2.0, SpectrumParams(1.0), DynamicsParams(1e-3))
    assert s_opt == pytest.approx(1.5, abs=1e-12)
    assert eps_opt == pytest.approx(0.4375, abs=1e-12)
    assert t_opt > 0
    assert rank1_closed_form(3.0, SpectrumParams(0.5), DynamicsParams(1e-3))[1] == pytest.approx(0.1579, abs=1e-4)
    s_big, e_big, _ = rank1_closed_form(1e4, SpectrumParams(0.5), DynamicsParams(1e-3))
    assert e_big < 1e-6 and s_big / 1e4 == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(BelowThreshold):
        rank1_closed_form(0.5, SpectrumParams(0.5), DynamicsParams(1e-3))


def test_nongradient_optimal_error():
    p = SpectrumParams(0.5)
    assert nongradient_optimal_error([3.0], p) == rank1_closed_form(3.0, p, DynamicsParams(1e-3))[1]
    assert nongradient_optimal_error([0.3, 0.5], p) == 1.0
    snrs = np.array([6.0, 4.0, 2.0])
    hand = np.sum(snrs**2 * [one_minus_o2(s, 0.5) for s in snrs]) / 56
    assert nongradient_optimal_error(snrs, p) == pytest.approx(hand, rel=1e-12)


def test_randomized_scale():
    sp = randomized_spectrum_params((6, 4, 2), 50, 100)
    assert sp.scale == pytest.approx(np.sqrt(1.13), rel=1e-12)
    assert sp.scale == pytest.approx(1.0630, abs=1e-4)
    assert randomized_spectrum_params((), 50, 100).scale == pytest.approx(0.1)
    assert sp.upper_edge == pytest.approx(sp.scale * (1 + np.sqrt(0.5)))


def test_randomized_training_is_slower():
    t = np.linspace(0, 10, 2001)
    structured = theory_train_error(t, RANK3)
    shuffled = randomized_train_error(t, (6.0, 4.0, 2.0), 100, 50, 50, DynamicsParams(1e-3))
    fresh = randomized_train_error(0.0, (6.0, 4.0, 2.0), 100, 50, 50, DynamicsParams(1e-8))
    assert fresh == pytest.approx(1.0, abs=1e-4)
    reach = lambda curve: t[np.argmax(curve <= 0.5)]  # noqa: E731
    assert reach(shuffled) > reach(structured)


def test_undersampled_untrained_is_one():
    cfg = TheoryConfig((3.0,), 100, 100, 100, DynamicsParams(1e-8), sample_count=50)
    assert undersampled_test_error(0.0, cfg) == pytest.approx(1.0, abs=1e-6)


def test_undersampled_continuous_at_full_sampling():
    t = np.array([0.5, 1.0, 2.0, 5.0])
    below = test_error_curve(t, TheoryConfig((3.0,), 100, 100, 100, sample_count=99))
    at = test_error_curve(t, TheoryConfig((3.0,), 100, 100, 100))
    np.testing.assert_allclose(below, at, rtol=0.02)


def test_undersampled_limit_matches_simulation():
    cfg = TheoryConfig((3.0,), 100, 100, 100, sample_count=50)
    times = (0.0, 1e4)
    sims = [flow_trace((3.0,), 100, 100, 100, 3, 1e-3, s, times, p=50).test_errors[-1] for s in range(10)]
    assert test_error_curve(np.inf, cfg) == pytest.approx(np.mean(sims), abs=0.05)


def test_undersampled_limit_against_exact_expectation():
    # W -> Y X^T: teacher part outside the data span plus projected noise
    n, p, sbar = 100, 50, 3.0
    exact = (sbar**2 * (1 - p / n) + n * p / n) / sbar**2
    cfg = TheoryConfig((sbar,), n, n, n, sample_count=p)
    assert test_error_curve(np.inf, cfg) == pytest.approx(exact, abs=0.05)


def test_undersampled_regime_guards():
    with pytest.raises(RegimeError):
        undersampled_test_error(1.0, TheoryConfig((3.0,), 100, 100, 100))
    with pytest.raises(RegimeError):
        theory_curves([1.0], TheoryConfig((3.0,), 100, 100, 100, sample_count=50))


def test_oversampled_identity_at_full_sampling():
    assert oversampled_equivalent(RANK1) == RANK1


def test_oversampled_mapping():
    eq = oversampled_equivalent(TheoryConfig((2.0,), 100, 50, 50, sample_count=400))
    assert eq.teacher_snrs == pytest.approx((4.0,))
    assert eq.sample_count == 100
    # sqrt(D) speed-up for three layers, checked against gradient descent below
    assert eq.dynamics.tau == pytest.approx(0.5)
    assert eq.dynamics.eps == pytest.approx(2e-3)


def test_oversampled_theory_matches_gradient_descent():
    cfg = TheoryConfig((2.0,), 100, 50, 50, sample_count=400)
    traces = [gd_trace((2.0,), 100, 50, 50, 3, 1e-3, "aligned", s, 8.0, 80, p=400) for s in range(3)]
    t = traces[0].times
    sim = np.mean([tr.test_errors for tr in traces], axis=0)
    assert np.max(np.abs(test_error_curve(t, cfg) - sim)) < 0.05


def test_config_validation():
    with pytest.raises(ConfigInvalid):
        TheoryConfig((3.0,), 50, 100, 10)
    with pytest.raises(ConfigInvalid):
        TheoryConfig((3.0, 4.0), 100, 50, 50)
    with pytest.raises(ConfigInvalid):
        TheoryConfig((3.0, 2.0, 1.0), 100, 50, 2)
    with pytest.raises(ConfigInvalid):
        theory_test_error(1.0, TheoryConfig((), 100, 50, 50))
