"""Seeded experiment cells shared by the figure recipes and the acceptance suite.

Each cell derives three independent generators (teacher, data, student) from
one integer seed, so cells can run in any order and still reproduce exactly.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..dynamics import DynamicsParams
from ..rmt import SpectrumParams, mp_mass, overlap, shat_of_sbar
from ..simulator import (
    ErrorTrace,
    init_student,
    make_dataset,
    make_teacher,
    record_schedule,
    ta_flow_trace,
    train_gd,
)
from ..transfer import rank1_pair, transfer_benefit_sim, transfer_benefit_theory


def streams(seed: int, n: int = 3):
    return [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(n)]


def common_lr(snrs, n1: int, n3: int, p: int | None = None) -> float:
    """Learning rate ``0.01 / shat_max`` from the predicted top data singular value.

    Data-independent, so every seed shares one time grid.
    """
    d = 1.0 if p is None else max(p / n1, 1.0)
    params = SpectrumParams(n3 / n1)
    top = max([float(shat_of_sbar(s * np.sqrt(d), params)) for s in snrs] + [params.upper_edge])
    return 0.01 / (top * np.sqrt(d) * 1.05)


def make_cell(snrs, n1: int, n3: int, seed: int, p: int | None = None, data_mode: str | None = None):
    t_rng, d_rng, s_rng = streams(seed)
    teacher = make_teacher(n1, n3, snrs, seed=t_rng)
    data = make_dataset(teacher, p, data_mode, seed=d_rng)
    return teacher, data, s_rng


@lru_cache(maxsize=256)
def gd_trace(snrs: tuple, n1: int, n3: int, n2: int, depth: int = 3, eps: float = 1e-3, init: str = "aligned",
             seed: int = 0, t_max: float = 30.0, n_records: int = 200, p: int | None = None,
             data_mode: str | None = None, activation: str = "linear") -> ErrorTrace:
    """Gradient-descent trace of one seeded teacher/data/student cell."""
    _, data, s_rng = make_cell(snrs, n1, n3, seed, p, data_mode)
    lam = common_lr(snrs, n1, n3, p)
    student = init_student((n1, n2, n3), depth, eps, init, data, seed=s_rng, activation=activation)
    trace, _ = train_gd(student, data, lam, record_epochs=record_schedule(t_max, lam, n_records),
                        k=min(n2, len(snrs)))
    return trace


@lru_cache(maxsize=256)
def flow_trace(snrs: tuple, n1: int, n3: int, n2: int, depth: int = 3, eps: float = 1e-3, seed: int = 0,
               times: tuple | None = None, p: int | None = None, data_mode: str | None = None) -> ErrorTrace:
    """Exact gradient-flow trace of a training-aligned student for one seeded cell."""
    _, data, _ = make_cell(snrs, n1, n3, seed, p, data_mode)
    t = np.asarray(times if times is not None else default_times(), float)
    return ta_flow_trace(data, n2, DynamicsParams(eps=eps, depth=depth), t)


def default_times(t_max: float = 100.0, n: int = 400):
    return tuple(np.concatenate([[0.0], np.logspace(-2, np.log10(t_max), n)]))


def mean_curves(traces):
    """Seed-averaged ``(times, train, test)``; all traces must share a time grid."""
    times = traces[0].times
    for tr in traces[1:]:
        if tr.times.shape != times.shape or not np.allclose(tr.times, times):
            raise ValueError("traces were recorded on different time grids")
    return (times, np.mean([t.train_errors for t in traces], axis=0),
            np.mean([t.test_errors for t in traces], axis=0))


def stopping_lag(random_trace: ErrorTrace, aligned_trace: ErrorTrace) -> float:
    """Relative delay of the random student's optimal stopping time."""
    t_r, _ = random_trace.min_test()
    t_a, _ = aligned_trace.min_test()
    return (t_r - t_a) / t_a


def spike_statistics(snrs, n: int = 100, n_seeds: int = 20, seed: int = 0):
    """Top singular value and overlap product of ``W_bar + Z`` for rank-1 teachers.

    Returns per-SNR arrays over seeds and the pooled bulk singular values of the
    pure-noise matrices (one per seed) for comparison with the MP law.
    """
    tops, ovls, bulk = [], [], []
    for s in snrs:
        t_row, o_row = [], []
        for cell in range(n_seeds):
            t_rng, z_rng = streams(seed * 100_003 + cell, 2)
            teacher = make_teacher(n, n, [s], seed=t_rng)
            z = z_rng.normal(0.0, 1.0 / np.sqrt(n), (n, n))
            u, sv, vt = np.linalg.svd(teacher.w_bar + z)
            t_row.append(sv[0])
            o_row.append(abs(u[:, 0] @ teacher.u_out[:, 0]) * abs(vt[0] @ teacher.v_in[:, 0]))
            if s == snrs[0]:
                bulk.append(np.linalg.svd(z, compute_uv=False))
        tops.append(t_row)
        ovls.append(o_row)
    return np.array(tops), np.array(ovls), np.concatenate(bulk)


def binned_cdf_distance(values, params: SpectrumParams, n_bins: int = 40) -> float:
    """Sup distance between empirical and MP cumulative mass at equally spaced bin edges."""
    lo, hi = params.support
    edges = np.linspace(lo, hi, n_bins + 1)
    values = np.sort(np.asarray(values, float))
    emp = np.searchsorted(values, edges, side="right") / len(values)
    theo = np.array([mp_mass((lo, e), params) for e in edges])
    return float(np.max(np.abs(emp - theo)))


def predicted_spikes(snrs, params: SpectrumParams):
    return np.atleast_1d(shat_of_sbar(snrs, params)), np.atleast_1d(overlap(snrs, params).o)


def transfer_table(snr_a, snr_bs, qs, n1, n3, n2, n_seeds, seed, eps=1e-3):
    """Rows ``q, snr_a, snr_b, T_theory, T_sim, ci`` in grid order (q outer, snr_b inner)."""
    rows = {"q": [], "snr_a": [], "snr_b": [], "T_theory": [], "T_sim": [], "ci": []}
    dyn = DynamicsParams(eps)
    for q in qs:
        for sb in snr_bs:
            pair = rank1_pair(n1, n3, snr_a, sb, float(q), seed=seed)
            th = transfer_benefit_theory(pair, dyn, n2=n2)
            sim = transfer_benefit_sim(pair, n_seeds=n_seeds, dyn=dyn, n2=n2, seed=seed)
            for key, val in zip(rows, (float(q), snr_a, sb, th.benefit, sim.benefit, sim.ci_halfwidth)):
                rows[key].append(val)
    return rows
