"""Analytic train/test error curves of a training-aligned student.

Every mode of the training covariance is learned independently along its own
learning curve (:mod:`gendyn.dynamics`), while the random-matrix results of
:mod:`gendyn.rmt` say where the modes sit and how much of the teacher they
carry. Combining the two gives closed expressions for the whole training
trajectory.

By default the noise bulk is corrected for finite size: it holds
``N3 - Nbar2`` modes (the outliers are taken out of it) and its scale is chosen
so that the bulk plus outliers carry the expected total energy
``N3 * sigma**2 + sum(sbar**2)`` of the training covariance. Passing
``finite_size=False`` gives the plain asymptotic expressions.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .dynamics import DynamicsParams, learning_curves, t_of_s
from .errors import BelowThreshold, ConfigInvalid, RegimeError
from .rmt import (
    SpectrumParams,
    mp_nodes,
    mp_quantile,
    mp_region_mean,
    overlap,
    shat_of_sbar,
)

BULK_NODES = 2001
STOP_GRID = (1e-2, 1e3, 200)
STOP_RTOL = 1e-6


@dataclass(frozen=True)
class TheoryConfig:
    """Teacher, student and data-set sizes for the analytic curves.

    ``teacher_snrs`` are the teacher singular values in units where the noise
    entries have variance ``noise_scale**2 / n1``. ``sample_count`` defaults to
    ``n1`` (one orthonormal input per input dimension).
    """

    teacher_snrs: tuple
    n1: int
    n3: int
    student_rank: int
    dynamics: DynamicsParams = field(default_factory=lambda: DynamicsParams(eps=1e-3))
    sample_count: int | None = None
    noise_scale: float = 1.0
    finite_size: bool = True

    def __post_init__(self):
        snrs = tuple(float(s) for s in np.atleast_1d(np.asarray(self.teacher_snrs, dtype=float)))
        object.__setattr__(self, "teacher_snrs", snrs)
        if self.sample_count is None:
            object.__setattr__(self, "sample_count", self.n1)
        if min(self.n1, self.n3, self.student_rank, self.sample_count) < 1:
            raise ConfigInvalid("all sizes must be positive")
        if self.n3 > self.n1:
            raise ConfigInvalid(f"aspect ratio n3/n1 = {self.n3 / self.n1:.3g} exceeds 1")
        if not self.teacher_rank <= self.student_rank <= self.n3:
            raise ConfigInvalid(
                f"need teacher rank ({self.teacher_rank}) <= student rank "
                f"({self.student_rank}) <= n3 ({self.n3})"
            )
        if any(s < 0 for s in snrs) or any(a < b for a, b in zip(snrs, snrs[1:])):
            raise ConfigInvalid("teacher SNRs must be non-negative and descending")
        if not self.noise_scale > 0:
            raise ConfigInvalid("noise scale must be positive")

    @property
    def aspect(self) -> float:
        return self.n3 / self.n1

    @property
    def teacher_rank(self) -> int:
        return len(self.teacher_snrs)

    @property
    def data_density(self) -> float:
        return self.sample_count / self.n1

    @property
    def spectrum(self) -> SpectrumParams:
        return SpectrumParams(self.aspect, self.noise_scale)


def _times(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("training time must be non-negative")
    return t


def _bulk_model(params: SpectrumParams, n_modes: int, energy: float, shat_sig, finite: bool):
    """Bulk spectrum and mode count; the scale absorbs the energy left after the outliers."""
    n_sig = len(shat_sig)
    if not finite or n_modes <= n_sig:
        return params, n_modes
    count = n_modes - n_sig
    kappa = (energy - float(np.sum(np.square(shat_sig)))) / count
    if kappa <= 0:
        return params, count
    return SpectrumParams(params.aspect, float(np.sqrt(kappa))), count


def _bulk_averages(times, bulk: SpectrumParams, region, dyn: DynamicsParams):
    """Conditional bulk averages of s**2 and (s - shat)**2 over ``region``."""
    x, w = mp_nodes(region, bulk, n=BULK_NODES)
    mass = w.sum()
    if mass <= 0:
        zero = np.zeros(len(times))
        return zero, zero
    s = learning_curves(times, x, dyn)
    return (s * s) @ w / mass, (s - x) ** 2 @ w / mass


def _matched_curves(times, cfg: TheoryConfig):
    """Train and test curves for P = N1 on the 1-d array ``times``."""
    params = cfg.spectrum
    sbar = np.asarray(cfg.teacher_snrs)
    shat = np.atleast_1d(shat_of_sbar(sbar, params)) if len(sbar) else np.zeros(0)
    ovl = np.atleast_1d(overlap(sbar, params).o) if len(sbar) else np.zeros(0)
    n2, nb, n3 = cfg.student_rank, cfg.teacher_rank, cfg.n3
    energy = n3 * cfg.noise_scale**2 + float(np.sum(sbar**2))

    bulk, count = _bulk_model(params, n3, energy, shat, cfg.finite_size)
    if cfg.finite_size:
        left = (n3 - n2) / count if count else 0.0
        denom = energy
    else:
        left = 1.0 - n2 / n3
        denom = n3 * cfg.noise_scale**2 + float(np.sum(shat**2))
    f = mp_quantile(bulk, min(max(left, 0.0), 1.0))

    train = np.zeros(len(times))
    test = np.zeros(len(times))
    if n3 > n2:
        train += (n3 - n2) * mp_region_mean(np.square, (bulk.lower_edge, f), bulk)
    if n2 > nb:
        s2, resid = _bulk_averages(times, bulk, (f, bulk.upper_edge), cfg.dynamics)
        train += (n2 - nb) * resid
        test += (n2 - nb) * s2
    if nb:
        s = learning_curves(times, shat, cfg.dynamics)
        train += np.sum((s - shat) ** 2, axis=1)
        test += np.sum((s - sbar) ** 2 + 2.0 * s * sbar * (1.0 - ovl), axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        test = test / float(np.sum(sbar**2)) if nb else np.full(len(times), np.nan)
    return train / denom, test


def theory_curves(times, cfg: TheoryConfig):
    """``(eps_train, eps_test)`` arrays on a time grid for ``P = N1``."""
    if cfg.sample_count != cfg.n1:
        raise RegimeError("train/test curves need P = N1; see test_error_curve for other P")
    times = _times(times)
    train, test = _matched_curves(np.atleast_1d(times).ravel(), cfg)
    return train.reshape(times.shape), test.reshape(times.shape)


def theory_train_error(t, cfg: TheoryConfig):
    train, _ = theory_curves(t, cfg)
    return float(train) if np.ndim(train) == 0 else train


def theory_test_error(t, cfg: TheoryConfig):
    if cfg.teacher_rank == 0:
        raise ConfigInvalid("test error is normalised by the teacher energy; no teacher modes given")
    _, test = theory_curves(t, cfg)
    return float(test) if np.ndim(test) == 0 else test


def undersampled_test_error(t, cfg: TheoryConfig, literal: bool = False):
    """Test error when only ``P < N1`` orthonormal inputs are available.

    Inputs outside the span of the data stay frozen at their initial strength.
    Inside the span the problem is a spiked model with aspect ratio ``D = P/N1``
    and teacher strengths attenuated to ``sqrt(D) * sbar``. The learned input
    vector lives in the data span, so its overlap with the full teacher input
    vector is a further factor ``sqrt(D)`` smaller; ``literal=True`` drops that
    factor (it overstates what can be learned and is kept for comparison).
    """
    if cfg.sample_count >= cfg.n1:
        raise RegimeError(f"undersampled formula needs P < N1, got P={cfg.sample_count}")
    if not cfg.n1 == cfg.n3 == cfg.student_rank:
        raise RegimeError("undersampled formula assumes n1 = n3 = student rank")
    if cfg.teacher_rank == 0:
        raise ConfigInvalid("no teacher modes given")
    times = _times(t)
    flat = np.atleast_1d(times).ravel()
    p, d = cfg.sample_count, cfg.data_density
    params = SpectrumParams(d, cfg.noise_scale)
    sbar = np.asarray(cfg.teacher_snrs)
    eff = np.sqrt(d) * sbar
    shat = np.atleast_1d(shat_of_sbar(eff, params))
    ovl = np.atleast_1d(overlap(eff, params).o) * (1.0 if literal else np.sqrt(d))
    energy = p * cfg.noise_scale**2 + float(np.sum(eff**2))
    bulk, count = _bulk_model(params, p, energy, shat, cfg.finite_size)
    if not cfg.finite_size:
        count = p - cfg.teacher_rank

    s2, _ = _bulk_averages(flat, bulk, bulk.support, cfg.dynamics)
    num = (cfg.n3 - p) * cfg.dynamics.eps**2 + count * s2
    s = learning_curves(flat, shat, cfg.dynamics)
    num += np.sum((s - sbar) ** 2 + 2.0 * s * sbar * (1.0 - ovl), axis=1)
    out = (num / float(np.sum(sbar**2))).reshape(times.shape)
    return float(out) if out.ndim == 0 else out


def oversampled_equivalent(cfg: TheoryConfig) -> TheoryConfig:
    """Map ``P >= N1`` row-orthonormal inputs onto an equivalent ``P = N1`` problem.

    With ``D = P/N1`` the data covariance is ``D * I`` and the noise shrinks to
    ``1/sqrt(D)`` relative to the signal. Rescaling the student by ``sqrt(D)``
    gives an ordinary problem with SNRs and ``eps`` both multiplied by
    ``sqrt(D)`` and the time constant divided by ``D**(1/(depth-1))``. Test errors
    (relative to the teacher) are identical in the two problems.
    """
    if cfg.sample_count < cfg.n1:
        raise RegimeError(f"oversampled mapping needs P >= N1, got P={cfg.sample_count}")
    d = cfg.data_density
    dyn = cfg.dynamics
    root = np.sqrt(d)
    new_dyn = DynamicsParams(
        eps=dyn.eps * root, tau=dyn.tau / d ** (1.0 / dyn.n_weights), depth=dyn.depth
    )
    snrs = tuple(s * root for s in cfg.teacher_snrs)
    return replace(cfg, teacher_snrs=snrs, sample_count=cfg.n1, dynamics=new_dyn)


def test_error_curve(t, cfg: TheoryConfig):
    """Test error for any sample count, dispatching on ``P`` versus ``N1``."""
    if cfg.sample_count < cfg.n1:
        return undersampled_test_error(t, cfg)
    if cfg.sample_count > cfg.n1:
        cfg = oversampled_equivalent(cfg)
    return theory_test_error(t, cfg)


# keep pytest from collecting the dispatcher as a test
test_error_curve.__test__ = False


def minimize_over_time(curve, tau: float = 1.0) -> tuple[float, float]:
    """``(t_min, value)`` of a vectorised curve ``curve(times)``.

    Scans ``t = 0`` plus a log grid, then refines by bounded golden-section
    search in ``log t`` between the neighbours of the best grid point.
    """
    lo, hi, n = STOP_GRID
    grid = np.concatenate([[0.0], tau * np.logspace(np.log10(lo), np.log10(hi), n)])
    err = np.asarray(curve(grid), dtype=float)
    i = int(np.nanargmin(err))
    if i == 0:
        return 0.0, float(err[0])
    a = np.log(grid[max(i - 1, 1)])
    b = np.log(grid[min(i + 1, n)])
    res = optimize.minimize_scalar(
        lambda u: float(np.asarray(curve(np.array([np.exp(u)])))[0]),
        bounds=(a, b), method="bounded", options={"xatol": STOP_RTOL},
    )
    if res.fun <= err[i]:
        return float(np.exp(res.x)), float(res.fun)
    return float(grid[i]), float(err[i])


def optimal_stopping(cfg: TheoryConfig) -> tuple[float, float]:
    """``(t_opt, eps_opt)`` minimising the theoretical test error over training time."""
    return minimize_over_time(lambda t: test_error_curve(t, cfg), cfg.dynamics.tau)


def rank1_closed_form(sbar: float, params: SpectrumParams, dyn: DynamicsParams):
    """Best reachable student strength, its test error and the time it is reached."""
    if sbar <= params.threshold:
        raise BelowThreshold(f"sbar={sbar} is not above the detection threshold {params.threshold:.4g}")
    o = overlap(sbar, params).o
    s_opt = sbar * o
    shat = shat_of_sbar(sbar, params)
    return s_opt, 1.0 - o * o, t_of_s(s_opt, shat, dyn)


def nongradient_optimal_error(snrs, params: SpectrumParams) -> float:
    """Test error of the estimator that keeps each mode at ``sbar * O(sbar)``."""
    sbar = np.atleast_1d(np.asarray(snrs, dtype=float))
    if sbar.size == 0:
        raise ValueError("need at least one teacher SNR")
    o = np.atleast_1d(overlap(sbar, params).o)
    return float(np.sum(sbar**2 * (1.0 - o**2)) / np.sum(sbar**2))


def randomized_spectrum_params(snrs, n3: int, n1: int, sigma_z: float = 1.0) -> SpectrumParams:
    """Bulk of the training covariance after the labels are shuffled.

    Shuffling spreads the teacher energy uniformly over all outputs, so the
    per-entry output variance becomes ``sum(sbar**2)/n3 + sigma_z**2/n1`` and
    its square root is the new bulk scale.
    """
    if n3 < 1 or n1 < 1:
        raise ValueError("n3 and n1 must be positive")
    energy = float(np.sum(np.square(np.asarray(snrs, dtype=float)))) if len(snrs) else 0.0
    sigma_r = np.sqrt(energy / n3 + sigma_z**2 / n1)
    return SpectrumParams(n3 / n1, float(sigma_r))


def randomized_train_error(t, snrs, n1: int, n3: int, student_rank: int,
                           dynamics: DynamicsParams, sigma_z: float = 1.0):
    """Training error on shuffled labels: a teacherless bulk of scale ``sigma_r``."""
    sp = randomized_spectrum_params(snrs, n3, n1, sigma_z)
    cfg = TheoryConfig((), n1, n3, student_rank, dynamics, noise_scale=sp.scale)
    return theory_train_error(t, cfg)
