import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from gendyn.errors import EmptyRegion, NotDetectable
from gendyn.rmt import (
    SpectrumParams,
    detection_threshold,
    mp_density,
    mp_mass,
    mp_quantile,
    mp_region_mean,
    overlap,
    sbar_of_shat,
    shat_of_sbar,
)

aspects = st.floats(0.05, 1.0)


def mp_density_oracle(x, a):
    lo, hi = 1 - np.sqrt(a), 1 + np.sqrt(a)
    if not lo < x < hi:
        return 0.0
    return np.sqrt(4 * a - (x * x - 1 - a) ** 2) / (np.pi * a * x)


@pytest.mark.parametrize("a, expected", [(1.0, 1.0), (0.5, 0.8409), (0.0625, 0.5)])
def test_detection_threshold(a, expected):
    assert detection_threshold(SpectrumParams(a)) == pytest.approx(expected, abs=1e-4)


def test_density_examples():
    assert mp_density(1.0, SpectrumParams(1.0)) == pytest.approx(np.sqrt(3) / np.pi, rel=1e-12)
    for a in (0.1, 0.5, 1.0):
        assert mp_density(1 + np.sqrt(a), SpectrumParams(a)) == pytest.approx(0.0, abs=1e-12)
    assert mp_density(5.0, SpectrumParams(0.5)) == 0.0


@pytest.mark.parametrize("a", [0.25, 0.5, 0.8])
def test_density_matches_direct_formula(a):
    xs = np.linspace(0.0, 2.2, 57)
    got = mp_density(xs, SpectrumParams(a))
    want = [mp_density_oracle(x, a) for x in xs]
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-14)


def test_density_scales_with_sigma():
    p1, p2 = SpectrumParams(0.5), SpectrumParams(0.5, 2.0)
    xs = np.linspace(0.4, 1.6, 9)
    np.testing.assert_allclose(mp_density(2 * xs, p2), mp_density(xs, p1) / 2, rtol=1e-12)


def test_normalisation_and_second_moment():
    p = SpectrumParams(0.5)
    assert mp_region_mean(lambda x: 1.0, p.support, p) == pytest.approx(1.0, abs=1e-8)
    assert mp_mass(p.support, p) == pytest.approx(1.0, abs=1e-8)
    for a in (1.0, 0.25):
        q = SpectrumParams(a)
        assert mp_region_mean(lambda x: x**2, q.support, q) == pytest.approx(1.0, abs=1e-6)


def test_second_moment_against_adaptive_quadrature():
    a = 0.3
    lo, hi = 1 - np.sqrt(a), 1 + np.sqrt(a)
    want, _ = integrate.quad(lambda x: x**3 * mp_density_oracle(x, a), lo, hi, limit=200)
    want /= integrate.quad(lambda x: mp_density_oracle(x, a), lo, hi, limit=200)[0]
    got = mp_region_mean(lambda x: x**3, (lo, hi), SpectrumParams(a))
    assert got == pytest.approx(want, rel=1e-7)


def test_empty_region():
    p = SpectrumParams(0.5)
    with pytest.raises(EmptyRegion):
        mp_region_mean(lambda x: x, (3.0, 4.0), p)


def test_quantile_examples():
    p = SpectrumParams(0.5)
    assert mp_quantile(p, 0.0) == pytest.approx(1 - np.sqrt(0.5), abs=1e-4)
    assert mp_quantile(p, 1.0) == pytest.approx(1 + np.sqrt(0.5), abs=1e-4)


def test_median_against_independent_oracle():
    lo, hi = 0.0, 2.0
    cdf = lambda f: integrate.quad(lambda x: mp_density_oracle(x, 1.0), lo, f, limit=200)[0]  # noqa: E731
    f_med = optimize.brentq(lambda f: cdf(f) - 0.5, 0.1, 1.9, xtol=1e-13)
    p = SpectrumParams(1.0)
    got = mp_quantile(p, 0.5)
    assert got == pytest.approx(f_med, abs=1e-7)
    assert mp_mass((0.0, got), p) == pytest.approx(0.5, abs=1e-8)


def test_quantile_rejects_bad_mass():
    with pytest.raises(ValueError):
        mp_quantile(SpectrumParams(0.5), 1.5)


def test_shat_examples():
    p = SpectrumParams(1.0)
    assert shat_of_sbar(2.0, p) == pytest.approx(2.5, abs=1e-12)
    assert shat_of_sbar(0.5, p) == pytest.approx(2.0, abs=1e-12)
    for a in (0.2, 0.5, 0.9):
        q = SpectrumParams(a)
        assert shat_of_sbar(a**0.25, q) == pytest.approx(1 + np.sqrt(a), rel=1e-12)


def test_sbar_examples():
    p = SpectrumParams(1.0)
    assert sbar_of_shat(2.5, p) == pytest.approx(2.0, abs=1e-12)
    for a in (0.2, 0.5):
        q = SpectrumParams(a)
        assert sbar_of_shat(1 + np.sqrt(a) + 1e-12, q) == pytest.approx(a**0.25, abs=1e-4)
    with pytest.raises(NotDetectable):
        sbar_of_shat(1.2, p)


def test_overlap_examples():
    o = overlap(2.0, SpectrumParams(1.0))
    assert (o.o_u, o.o_v, o.o) == pytest.approx((np.sqrt(0.75), np.sqrt(0.75), 0.75), abs=1e-12)
    for a in (0.3, 1.0):
        o = overlap(0.9 * a**0.25, SpectrumParams(a))
        assert (o.o_u, o.o_v, o.o) == (0.0, 0.0, 0.0)
    o = overlap(1e6, SpectrumParams(0.5))
    assert (o.o_u, o.o_v, o.o) == pytest.approx((1.0, 1.0, 1.0), abs=1e-9)


def test_overlap_brackets_at_a_half():
    # bracket values 0.94152 and 0.89444 at sbar = 3
    o = overlap(3.0, SpectrumParams(0.5))
    assert sorted([o.o_u**2, o.o_v**2]) == pytest.approx([0.89444, 0.94152], abs=1e-5)
    assert o.o**2 == pytest.approx(0.84214, abs=1e-5)


def test_overlap_sides_match_sampling():
    # output vectors (N3 side) carry the smaller overlap when A < 1
    rng = np.random.default_rng(4)
    n1, n3, s = 400, 100, 2.0
    us, vs = [], []
    for _ in range(10):
        u = np.linalg.qr(rng.standard_normal((n3, 1)))[0]
        v = np.linalg.qr(rng.standard_normal((n1, 1)))[0]
        m = s * u @ v.T + rng.standard_normal((n3, n1)) / np.sqrt(n1)
        uh, _, vh = np.linalg.svd(m, full_matrices=False)
        us.append(abs(uh[:, 0] @ u[:, 0]))
        vs.append(abs(vh[0] @ v[:, 0]))
    o = overlap(s, SpectrumParams(0.25))
    assert np.mean(us) == pytest.approx(o.o_u, abs=0.02)
    assert np.mean(vs) == pytest.approx(o.o_v, abs=0.02)


def test_params_validation():
    for bad in (0.0, 1.5, -0.2):
        with pytest.raises(ValueError):
            SpectrumParams(bad)
    with pytest.raises(ValueError):
        SpectrumParams(0.5, 0.0)


@settings(max_examples=200, deadline=None)
@given(a=aspects, excess=st.floats(1e-3, 50.0), scale=st.floats(0.1, 10.0))
def test_shat_sbar_round_trip(a, excess, scale):
    p = SpectrumParams(a, scale)
    sbar = scale * a**0.25 * (1 + excess)
    back = sbar_of_shat(shat_of_sbar(sbar, p), p)
    assert back == pytest.approx(sbar, rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(a=aspects, x=st.floats(0.0, 20.0))
def test_overlap_bounded_and_monotone(a, x):
    p = SpectrumParams(a)
    o1, o2 = overlap(x, p).o, overlap(x + 0.1, p).o
    assert 0.0 <= o1 <= o2 <= 1.0
