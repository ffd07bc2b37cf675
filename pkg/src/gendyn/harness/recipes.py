"""Canonical parameterisations of every figure, written as overlay-ready CSVs.

Caption-scale dimensions are used throughout. Initial scale, learning rate and
run length are not given by the captions; the values below (eps = 1e-3,
lam = 0.01 / shat_max, runs long enough for the bulk to saturate) were picked
to make the curve shapes readable, and times are reported as t/tau.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..dynamics import DynamicsParams, learning_curves
from ..errors import UnknownFigure
from ..io import write_table_csv
from ..rmt import SpectrumParams, mp_density, overlap, shat_of_sbar
from ..shrinkage import shrink_denoise
from ..simulator import alignment_time, measure_errors
from ..theory import (
    TheoryConfig,
    nongradient_optimal_error,
    optimal_stopping,
    randomized_spectrum_params,
    randomized_train_error,
    test_error_curve,
    theory_curves,
)
from . import experiments as ex
from .plots import line_plot

EPS = 1e-3


class Recipe:
    def __init__(self, outdir, plot: bool):
        self.outdir = Path(outdir)
        self.plot = plot
        self.outputs: list[str] = []

    def table(self, name: str, columns: dict):
        path = self.outdir / f"{name}.csv"
        write_table_csv(path, columns)
        self.outputs.append(str(path))

    def figure(self, name: str, x, series: dict, **kw):
        if self.plot:
            self.outputs.append(line_plot(self.outdir / f"{name}.svg", x, series, **kw))


def fig1(r: Recipe, seeds: int):
    shats = [0.5, 1.0, 2.0, 3.0, 4.0]
    t = np.logspace(-2, 1.5, 200)
    s = learning_curves(t, shats, DynamicsParams(EPS))
    cols = {"t_over_tau": t} | {f"s_over_shat_{v:g}": s[:, j] / v for j, v in enumerate(shats)}
    r.table("fig1_learning_curves", cols)
    r.figure("fig1_learning_curves", t, {k: v for k, v in cols.items() if k != "t_over_tau"},
             xlabel="t/tau", ylabel="s/shat", logx=True)
    grid = np.linspace(0.05, 4.0, 200)
    times = [0.5, 1.0, 2.0, 4.0, 8.0]
    wave = learning_curves(times, grid, DynamicsParams(EPS)) / grid
    cols = {"shat": grid} | {f"t_{tt:g}": wave[i] for i, tt in enumerate(times)}
    r.table("fig1_detection_wave", cols)
    r.figure("fig1_detection_wave", grid, {k: v for k, v in cols.items() if k != "shat"},
             xlabel="shat", ylabel="s/shat")


def fig2(r: Recipe, seeds: int):
    n = 100
    params = SpectrumParams(1.0)
    snrs = np.linspace(0.25, 4.0, 16)
    tops, ovls, bulk = ex.spike_statistics(list(snrs), n=n, n_seeds=seeds)
    r.table("fig2_spikes", {
        "sbar": snrs, "shat_emp": tops.mean(1), "shat_theory": shat_of_sbar(snrs, params),
        "overlap_emp": ovls.mean(1), "overlap_theory": overlap(snrs, params).o,
    })
    edges = np.linspace(0.0, 2.2, 45)
    hist, _ = np.histogram(bulk, bins=edges, density=True)
    centres = 0.5 * (edges[1:] + edges[:-1])
    r.table("fig2_spectrum", {"shat": centres, "density_emp": hist, "density_mp": mp_density(centres, params)})
    r.figure("fig2_spectrum", centres, {"empirical": hist, "MP": mp_density(centres, params)},
             xlabel="singular value", ylabel="density", styles={"empirical": "o"})
    r.figure("fig2_overlap", snrs, {"empirical": ovls.mean(1), "theory": overlap(snrs, params).o},
             xlabel="sbar", ylabel="overlap", styles={"empirical": "o"})


def _curve_set(r: Recipe, tag: str, snrs, depth: int, seeds: int, t_max: float):
    n1, n2, n3 = 100, 50, 50
    runs = {init: [ex.gd_trace(tuple(snrs), n1, n3, n2, depth, EPS, init, s, t_max, 150) for s in range(seeds)]
            for init in ("aligned", "random")}
    t, ta_tr, ta_te = ex.mean_curves(runs["aligned"])
    _, ra_tr, ra_te = ex.mean_curves(runs["random"])
    th_tr, th_te = theory_curves(t, TheoryConfig(tuple(snrs), n1, n3, n2, DynamicsParams(EPS, depth=depth)))
    r.table(tag, {"t_over_tau": t, "theory_train": th_tr, "theory_test": th_te, "ta_train": ta_tr,
                  "ta_test": ta_te, "random_train": ra_tr, "random_test": ra_te})
    r.figure(tag, t[1:], {"theory test": th_te[1:], "TA test": ta_te[1:], "random test": ra_te[1:],
                          "theory train": th_tr[1:], "TA train": ta_tr[1:]},
             xlabel="t/tau", ylabel="error", logx=True,
             styles={"TA test": "o", "random test": "x", "TA train": "s"})


def fig3(r: Recipe, seeds: int):
    _curve_set(r, "fig3_rank1", [3.0], 3, seeds, 30.0)
    _curve_set(r, "fig3_rank3", [6.0, 4.0, 2.0], 3, seeds, 30.0)


def fig_deep(r: Recipe, seeds: int):
    _curve_set(r, "fig_deep_rank1", [3.0], 5, seeds, 100.0)
    _curve_set(r, "fig_deep_rank3", [6.0, 4.0, 2.0], 5, seeds, 100.0)


def fig5(r: Recipe, seeds: int):
    qs = np.linspace(0.0, 1.0, 5)
    snr_bs = [1.0, 2.0, 3.0, 5.0, 10.0]
    for snr_a in (0.84, 3.0, 100.0):
        rows = ex.transfer_table(snr_a, snr_bs, qs, 100, 50, None, seeds, 0)
        r.table(f"fig5_transfer_snrA_{snr_a:g}", rows)
        at_top = np.array(rows["snr_b"]) == snr_bs[-1]
        r.figure(f"fig5_transfer_snrA_{snr_a:g}", np.array(rows["q"])[at_top],
                 {"theory": np.array(rows["T_theory"])[at_top], "simulation": np.array(rows["T_sim"])[at_top]},
                 xlabel=f"q (snr_b={snr_bs[-1]:g})", ylabel="transfer benefit", styles={"simulation": "o"})


def fig6(r: Recipe, seeds: int):
    snrs, n1, n3 = (6.0, 4.0, 2.0), 100, 50
    times = ex.default_times(30.0, 200)
    t = np.asarray(times)
    structured = [ex.flow_trace(snrs, n1, n3, n3, 3, EPS, s, times) for s in range(seeds)]
    shuffled = [ex.flow_trace(snrs, n1, n3, n3, 3, EPS, s, times, data_mode="randomized_labels")
                for s in range(seeds)]
    th_s, _ = theory_curves(t, TheoryConfig(snrs, n1, n3, n3, DynamicsParams(EPS)))
    th_r = randomized_train_error(t, snrs, n1, n3, n3, DynamicsParams(EPS))
    r.table("fig6_curves", {"t_over_tau": t, "theory_structured": th_s, "sim_structured": ex.mean_curves(structured)[1],
                            "theory_randomized": th_r, "sim_randomized": ex.mean_curves(shuffled)[1]})
    r.figure("fig6_curves", t[1:], {"structured theory": th_s[1:], "randomized theory": th_r[1:],
                                    "structured sim": ex.mean_curves(structured)[1][1:],
                                    "randomized sim": ex.mean_curves(shuffled)[1][1:]},
             xlabel="t/tau", ylabel="train error", logx=True,
             styles={"structured sim": "o", "randomized sim": "x"})
    _, d_s, _ = ex.make_cell(snrs, n1, n3, 0)
    _, d_r, _ = ex.make_cell(snrs, n1, n3, 0, data_mode="randomized_labels")
    sp = randomized_spectrum_params(snrs, n3, n1)
    r.table("fig6_spectra", {"rank": np.arange(1, n3 + 1), "structured": d_s.shat, "randomized": d_r.shat,
                             "randomized_edge_theory": np.full(n3, sp.upper_edge)})


def fig_alignment(r: Recipe, seeds: int):
    series = {}
    for depth, t_max in ((3, 30.0), (5, 100.0)):
        tr = ex.gd_trace((3.0,), 100, 50, 50, depth, EPS, "random", 0, t_max, 150)
        product = tr.align_u[:, 0] * tr.align_v[:, 0]
        r.table(f"fig_alignment_depth{depth}", {
            "t_over_tau": tr.times, "align_u": tr.align_u[:, 0], "align_v": tr.align_v[:, 0],
            "s_1": tr.mode_values[:, 0], "align_time": np.full(len(tr.times), alignment_time(tr)),
        })
        series[depth] = (tr.times[1:], product[1:])
        r.figure(f"fig_alignment_depth{depth}", tr.times[1:], {f"depth {depth}": product[1:]},
                 xlabel="t/tau", ylabel="|u.uhat||v.vhat|", logx=True)


def fig_P(r: Recipe, seeds: int):
    n = 100
    ps = [25, 50, 100, 200, 400]
    times = ex.default_times(100.0, 300)
    t = np.asarray(times)
    cols = {"t_over_tau": t}
    for p in ps:
        cfg = TheoryConfig((3.0,), n, n, n, DynamicsParams(EPS), sample_count=p)
        cols[f"theory_P{p}"] = test_error_curve(t, cfg)
        sims = [ex.flow_trace((3.0,), n, n, n, 3, EPS, s, times, p=p) for s in range(seeds)]
        cols[f"sim_P{p}"] = ex.mean_curves(sims)[2]
    r.table("figP_test_curves", cols)
    r.figure("figP_test_curves", t[1:], {k: v[1:] for k, v in cols.items() if k.startswith("theory")},
             xlabel="t/tau", ylabel="test error", logx=True)
    rows = {"snr": [], "P": [], "sqrt_D": [], "snr_sqrt_D": [], "min_theory": [], "min_sim": []}
    for snr in (1.0, 2.0, 3.0, 4.0):
        for p in ps:
            cfg = TheoryConfig((snr,), n, n, n, DynamicsParams(EPS), sample_count=p)
            sims = [ex.flow_trace((snr,), n, n, n, 3, EPS, s, times, p=p) for s in range(seeds)]
            for key, val in zip(rows, (snr, p, np.sqrt(p / n), snr * np.sqrt(p / n), optimal_stopping(cfg)[1],
                                       float(np.min(ex.mean_curves(sims)[2])))):
                rows[key].append(val)
    r.table("figP_min_error", rows)
    rows = {"snr": [], "min_orthogonal": [], "min_gaussian": []}
    for snr in (1.0, 2.0, 3.0, 4.0):
        orth = [ex.gd_trace((snr,), n, n, n, 3, EPS, "aligned", s, 20.0, 120) for s in range(seeds)]
        gaus = [ex.gd_trace((snr,), n, n, n, 3, EPS, "aligned", s, 20.0, 120, p=n, data_mode="gaussian_inputs")
                for s in range(seeds)]
        rows["snr"].append(snr)
        rows["min_orthogonal"].append(float(np.mean([tr.min_test()[1] for tr in orth])))
        rows["min_gaussian"].append(float(np.mean([tr.min_test()[1] for tr in gaus])))
    r.table("figP_gaussian_vs_orthogonal", rows)


def fig_rank(r: Recipe, seeds: int):
    n = 100
    rows = {"n2": [], "theory_min": [], "ta_min": [], "random_min": [], "stopping_lag": []}
    for n2 in (5, 10, 25, 50, 100):
        cfg = TheoryConfig((3.0,), n, n, n2, DynamicsParams(EPS))
        ta = [ex.gd_trace((3.0,), n, n, n2, 3, EPS, "aligned", s, 20.0, 200) for s in range(seeds)]
        rd = [ex.gd_trace((3.0,), n, n, n2, 3, EPS, "random", s, 20.0, 200) for s in range(seeds)]
        for key, val in zip(rows, (n2, optimal_stopping(cfg)[1], np.mean([x.min_test()[1] for x in ta]),
                                   np.mean([x.min_test()[1] for x in rd]),
                                   np.mean([ex.stopping_lag(a, b) for a, b in zip(rd, ta)]))):
            rows[key].append(val)
    r.table("fig_rank", rows)
    r.figure("fig_rank", rows["n2"], {"theory": rows["theory_min"], "TA": rows["ta_min"], "random": rows["random_min"]},
             xlabel="student rank", ylabel="optimal stopping error", styles={"TA": "o", "random": "x"})


def fig_shrink(r: Recipe, seeds: int):
    params = SpectrumParams(0.5)
    snrs = np.linspace(0.5, 5.0, 10)
    rows = {"sbar": [], "shrink_theory": [], "shrink_emp": [], "gradient_theory": []}
    for s in snrs:
        emp = []
        for seed in range(seeds):
            _, data, _ = ex.make_cell((float(s),), 100, 50, seed)
            emp.append(measure_errors(shrink_denoise(data.sigma31, params).estimate, data)[1])
        rows["sbar"].append(s)
        rows["shrink_theory"].append(nongradient_optimal_error([s], params))
        rows["shrink_emp"].append(float(np.mean(emp)))
        rows["gradient_theory"].append(optimal_stopping(TheoryConfig((float(s),), 100, 50, 50))[1])
    r.table("fig_shrink", rows)
    r.figure("fig_shrink", snrs, {"shrinkage theory": rows["shrink_theory"], "shrinkage": rows["shrink_emp"],
                                  "gradient (optimal stopping)": rows["gradient_theory"]},
             xlabel="sbar", ylabel="test error", styles={"shrinkage": "o"})


RECIPES = {
    "fig1": (fig1, 1),
    "fig2": (fig2, 20),
    "fig3": (fig3, 3),
    "fig_deep": (fig_deep, 2),
    "fig5": (fig5, 10),
    "fig6": (fig6, 5),
    "fig_alignment": (fig_alignment, 1),
    "fig_P": (fig_P, 3),
    "fig_rank": (fig_rank, 2),
    "fig_shrink": (fig_shrink, 10),
}


def run_recipe(figure_id: str, outdir, plot: bool = True, seeds: int | None = None) -> list[str]:
    if figure_id not in RECIPES:
        raise UnknownFigure(f"unknown figure {figure_id!r}; choose from {', '.join(RECIPES)}")
    fn, default_seeds = RECIPES[figure_id]
    r = Recipe(outdir, plot)
    fn(r, seeds or default_seeds)
    return r.outputs
