import warnings

import numpy as np
import pytest

from gendyn.dynamics import DynamicsParams, s_of_t
from gendyn.errors import DimError, Divergence, MissingDataset, ModeError
from gendyn.harness.experiments import gd_trace
from gendyn.simulator import (
    ErrorTrace,
    TeacherSpec,
    alignment_time,
    init_student,
    make_dataset,
    make_teacher,
    measure_errors,
    record_schedule,
    ta_flow_trace,
    train_error_svd_form,
    train_gd,
)


@pytest.fixture(scope="module")
def rank1():
    teacher = make_teacher(100, 50, [3.0], seed=1)
    return teacher, make_dataset(teacher, seed=2)


def test_teacher_examples():
    assert np.linalg.norm(make_teacher(40, 30, [3.0], seed=0).w_bar) == pytest.approx(3.0)
    assert np.sum(make_teacher(40, 30, [6, 4, 2], seed=0).w_bar ** 2) == pytest.approx(56.0)
    a, b = make_teacher(40, 30, [6, 4, 2], seed=7), make_teacher(40, 30, [6, 4, 2], seed=7)
    assert np.array_equal(a.u_out, b.u_out) and np.array_equal(a.v_in, b.v_in)


def test_teacher_validation():
    with pytest.raises(DimError):
        make_teacher(10, 5, np.ones(6))
    with pytest.raises(ValueError):
        TeacherSpec(np.eye(3)[:, :2], [1.0, 2.0], np.eye(3)[:, :2])


def test_dataset_designs():
    t = make_teacher(50, 20, [2.0], seed=0)
    np.testing.assert_allclose(make_dataset(t, seed=1).sigma11, np.eye(50), atol=1e-15)
    np.testing.assert_allclose(make_dataset(t, 100, seed=1).sigma11, 2 * np.eye(50), atol=1e-10)
    under = make_dataset(t, 20, seed=1)
    np.testing.assert_allclose(under.x.T @ under.x, np.eye(20), atol=1e-12)
    with pytest.raises(ModeError):
        make_dataset(t, 40, mode="orthonormal_P_eq_N1")
    with pytest.raises(ModeError):
        make_dataset(t, mode="nonsense")


def test_noise_energy():
    t = make_teacher(60, 30, [0.0], seed=0)
    energies = [make_dataset(t, seed=s).output_energy for s in range(100)]
    assert np.mean(energies) == pytest.approx(30.0, rel=0.05)


def test_aligned_init(rank1):
    _, data = rank1
    st = init_student((100, 10, 50), 3, 1e-3, "aligned", data, seed=0)
    w = st.composite()
    sv = np.linalg.svd(w, compute_uv=False)
    np.testing.assert_allclose(sv[:10], 1e-3, rtol=1e-8)
    assert np.all(sv[10:] < 1e-15)
    uh, _, vh = data.svd31
    np.testing.assert_allclose(w, 1e-3 * uh[:, :10] @ vh[:, :10].T, atol=1e-15)


def test_random_init_is_balanced(rank1):
    _, data = rank1
    st = init_student((100, 20, 50), 5, 1e-4, "random", seed=3)
    np.testing.assert_allclose(np.linalg.svd(st.composite(), compute_uv=False)[:20], 1e-4, rtol=1e-8)
    for layer in st.layers:
        np.testing.assert_allclose(np.linalg.svd(layer, compute_uv=False)[:20], 1e-4 ** 0.25, rtol=1e-10)


def test_init_validation(rank1):
    with pytest.raises(MissingDataset):
        init_student((100, 10, 50), 3, 1e-3, "aligned")
    with pytest.raises(ModeError):
        init_student((100, 10, 50), 3, 1e-3, "sideways")
    with pytest.raises(DimError):
        init_student((100, 60, 50), 3, 1e-3, "random")


def test_error_examples(rank1):
    teacher, data = rank1
    assert measure_errors(data.sigma31, data)[0] == pytest.approx(0.0, abs=1e-12)
    assert measure_errors(np.zeros((50, 100)), data) == pytest.approx((1.0, 1.0))
    assert measure_errors(teacher.w_bar, data)[1] == 0.0


def test_trace_and_svd_forms_agree(rank1):
    _, data = rank1
    rng = np.random.default_rng(0)
    for _ in range(5):
        w = rng.standard_normal((50, 100)) * 0.1 + data.sigma31 * rng.uniform()
        assert train_error_svd_form(w, data) == pytest.approx(measure_errors(w, data)[0], abs=1e-9)


def test_ta_training_keeps_alignment_and_follows_curve(rank1):
    _, data = rank1
    lam = 1e-3 / data.shat[0]
    st = init_student((100, 50, 50), 3, 1e-3, "aligned", data, seed=0)
    trace, _ = train_gd(st, data, lam, record_epochs=record_schedule(4.0, lam, 30), k=3)
    assert np.all(trace.align_u > 1 - 1e-6) and np.all(trace.align_v > 1 - 1e-6)
    want = s_of_t(trace.times, data.shat[0], DynamicsParams(1e-3))
    assert np.max(np.abs(trace.mode_values[:, 0] - want)) < 0.01
    assert np.all(np.diff(trace.train_errors) <= 1e-12)


def test_flow_trace_matches_gradient_descent(rank1):
    _, data = rank1
    lam = 1e-3 / data.shat[0]
    st = init_student((100, 50, 50), 3, 1e-3, "aligned", data, seed=0)
    gd, _ = train_gd(st, data, lam, record_epochs=record_schedule(5.0, lam, 20))
    flow = ta_flow_trace(data, 50, DynamicsParams(1e-3), gd.times)
    assert np.max(np.abs(gd.test_errors - flow.test_errors)) < 0.01
    assert np.max(np.abs(gd.train_errors - flow.train_errors)) < 0.01


def test_random_init_aligns_before_rise():
    tr = gd_trace((3.0,), 100, 50, 50, 3, 1e-3, "random", 0, 20.0, 120)
    t_align = alignment_time(tr)
    shat = tr.mode_values[-1, 0]
    t_rise = tr.times[np.argmax(tr.mode_values[:, 0] >= 0.9 * shat)]
    assert t_align < t_rise


def test_depth5_aligns_later():
    d3 = gd_trace((3.0,), 100, 50, 50, 3, 1e-3, "random", 0, 30.0, 150)
    d5 = gd_trace((3.0,), 100, 50, 50, 5, 1e-3, "random", 0, 100.0, 150)
    assert alignment_time(d5) > alignment_time(d3)


def test_divergence_is_raised(rank1):
    _, data = rank1
    st = init_student((100, 10, 50), 3, 1e-3, "aligned", data, seed=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(Divergence):
            train_gd(st, data, lam=5.0, epochs=200)


def test_leaky_relu_runs(rank1):
    _, data = rank1
    st = init_student((100, 10, 50), 3, 1e-3, "random", seed=0, activation="leaky_relu")
    trace, _ = train_gd(st, data, 0.003, epochs=300, record_every=100, seed=1)
    assert np.all(np.isfinite(trace.test_errors))
    assert trace.train_errors[-1] < trace.train_errors[0]


def test_trace_csv_round_trip(tmp_path, rank1):
    _, data = rank1
    tr = ta_flow_trace(data, 10, DynamicsParams(1e-3), np.linspace(0, 3, 7))
    tr.to_csv(tmp_path / "t.csv")
    back = ErrorTrace.from_csv(tmp_path / "t.csv")
    np.testing.assert_array_equal(back.test_errors, tr.test_errors)
    np.testing.assert_array_equal(back.mode_values, tr.mode_values)
