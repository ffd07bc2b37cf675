"""Dispatch an ExperimentConfig to the library and record what was written."""
from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from .. import __version__
from ..dynamics import DynamicsParams
from ..errors import ConfigInvalid, ConfigParse
from ..io import read_matrix_csv, write_matrix_csv, write_table_csv
from ..rmt import SpectrumParams
from ..shrinkage import estimate_noise_scale, shrink_denoise
from ..simulator import init_student, record_schedule, train_gd
from ..theory import TheoryConfig, test_error_curve, theory_curves
from .config import ExperimentConfig, RunManifest
from .experiments import common_lr, make_cell, transfer_table
from .plots import line_plot
from .recipes import run_recipe

TRANSFER_GRID_Q = tuple(np.linspace(0.0, 1.0, 5))
TRANSFER_GRID_SNR_B = (1.0, 2.0, 3.0, 5.0, 10.0)


def _times(cfg: ExperimentConfig) -> np.ndarray:
    return np.concatenate([[0.0], np.logspace(np.log10(cfg.t_min), np.log10(cfg.t_max), cfg.n_times)])


def _theory_config(cfg: ExperimentConfig) -> TheoryConfig:
    dyn = DynamicsParams(cfg.eps, cfg.tau, cfg.depth)
    return TheoryConfig(tuple(cfg.snrs), cfg.n1, cfg.n3, cfg.n2, dyn, sample_count=cfg.sample_count,
                        noise_scale=cfg.sigma_z, finite_size=cfg.finite_size)


def _out(cfg: ExperimentConfig, out, default: str) -> Path:
    return Path(out) if out is not None else Path(cfg.output_dir) / default


def _run_theory(cfg, out):
    tc = _theory_config(cfg)
    t = _times(cfg)
    if tc.sample_count in (None, cfg.n1):
        train, test = theory_curves(t, tc)
    else:
        # training error has no closed form away from P = N1
        train, test = np.full_like(t, np.nan), test_error_curve(t, tc)
    path = _out(cfg, out, "theory.csv")
    write_table_csv(path, {"t_over_tau": t, "eps_train": train, "eps_test": test})
    outputs = [str(path)]
    if cfg.plot:
        outputs.append(line_plot(path.with_suffix(".svg"), t[1:], {"train": train[1:], "test": test[1:]},
                                 xlabel="t/tau", ylabel="error", logx=True))
    return outputs


def _run_simulate(cfg, out):
    _, data, s_rng = make_cell(tuple(cfg.snrs), cfg.n1, cfg.n3, cfg.seed, cfg.sample_count, cfg.data_mode)
    lam = cfg.lam if cfg.lam is not None else common_lr(cfg.snrs, cfg.n1, cfg.n3, cfg.sample_count)
    student = init_student((cfg.n1, cfg.n2, cfg.n3), cfg.depth, cfg.eps, cfg.init, data, seed=s_rng,
                           activation=cfg.activation, slope=cfg.slope)
    trace, _ = train_gd(student, data, lam, record_epochs=record_schedule(cfg.t_max, lam, cfg.n_times, cfg.t_min),
                        k=min(cfg.n2, len(cfg.snrs)), seed=cfg.seed)
    path = _out(cfg, out, "simulation.csv")
    trace.to_csv(path)
    outputs = [str(path)]
    if cfg.plot:
        outputs.append(line_plot(path.with_suffix(".svg"), trace.times[1:],
                                 {"train": trace.train_errors[1:], "test": trace.test_errors[1:]},
                                 xlabel="t/tau", ylabel="error", logx=True))
    return outputs


def shrink_files(input_path, aspect: float | None, out, report, margin: float, estimate_scale: bool = False):
    m = read_matrix_csv(input_path)
    if aspect is None:
        aspect = m.shape[0] / m.shape[1]
    params = SpectrumParams(float(aspect))
    rep = shrink_denoise(m, params, margin, estimate_scale=estimate_scale)
    write_matrix_csv(out, rep.estimate)
    det = np.array(rep.detected, dtype=float).reshape(-1, 3)
    write_table_csv(report, {"mode": np.arange(1, len(det) + 1), "shat": det[:, 0], "sbar": det[:, 1],
                             "shrunk": det[:, 2], "bulk_edge": np.full(len(det), rep.bulk_edge),
                             "noise_scale": np.full(len(det), rep.scale)})
    return [str(out), str(report)]


def _run_shrink(cfg, out):
    if cfg.input is None:
        raise ConfigInvalid("shrink needs an input matrix")
    out = _out(cfg, out, "denoised.csv")
    report = Path(cfg.report) if cfg.report is not None else out.with_name(out.stem + "_report.csv")
    return shrink_files(cfg.input, cfg.aspect, out, report, cfg.margin, cfg.estimate_scale)


def _run_transfer(cfg, out):
    if cfg.grid:
        qs, sbs = TRANSFER_GRID_Q, TRANSFER_GRID_SNR_B
    else:
        qs, sbs = (cfg.q,), (cfg.snr_b,)
    rows = transfer_table(cfg.snr_a, sbs, qs, cfg.n1, cfg.n3, cfg.n2 if cfg.n2 <= 2 * cfg.n3 else None,
                          max(cfg.n_seeds, 2), cfg.seed, cfg.eps)
    path = _out(cfg, out, "transfer.csv")
    write_table_csv(path, rows)
    return [str(path)]


def _run_reproduce(cfg, out):
    if cfg.figure is None:
        raise ConfigInvalid("reproduce needs a figure id")
    outdir = Path(out) if out is not None else Path(cfg.output_dir)
    return run_recipe(cfg.figure, outdir, plot=cfg.plot)


DISPATCH = {
    "theory_curve": _run_theory,
    "simulate": _run_simulate,
    "shrink": _run_shrink,
    "transfer": _run_transfer,
    "reproduce": _run_reproduce,
}


def run(config: ExperimentConfig | dict, out=None, manifest=None) -> RunManifest:
    """Run one experiment; outputs go to ``out`` (a file, or a directory for reproduce).

    The manifest lands in ``manifest`` or next to the outputs as ``manifest.json``.
    """
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    elif not isinstance(config, ExperimentConfig):
        raise ConfigParse(f"expected an ExperimentConfig, got {type(config).__name__}")
    start = time.perf_counter()
    outputs = DISPATCH[config.kind](config, out)
    man = RunManifest(config.to_dict(), config.seed, __version__, time.perf_counter() - start, outputs)
    if manifest is None:
        base = Path(out) if out is not None else Path(config.output_dir)
        manifest = (base if config.kind == "reproduce" else base.parent) / "manifest.json"
        if config.kind != "reproduce" and out is not None:
            manifest = base.with_name(base.stem + ".manifest.json")
    man.write(manifest)
    return man


def reproduce(figure_id: str, outdir="out", plot: bool = True) -> RunManifest:
    cfg = ExperimentConfig(kind="reproduce", figure=figure_id, output_dir=str(outdir), plot=plot)
    return run(cfg, outdir)


def noise_scale_of(path, aspect: float | None = None, margin: float = 0.02) -> float:
    m = read_matrix_csv(path)
    return estimate_noise_scale(m, SpectrumParams(aspect or m.shape[0] / m.shape[1]), margin)
