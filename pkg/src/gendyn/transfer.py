"""Two tasks sharing an input layer: composite teacher and transfer benefit.

Stacking the outputs of tasks A and B gives a composite teacher whose singular
structure depends only on the two sets of SNRs and on the input-overlap matrix
``Q = V_A^T V_B``. The benefit task B confers on task A is the drop in A's
optimally stopped test error when a single student is trained on both.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .dynamics import DynamicsParams, learning_curves
from .errors import AspectError, DimError, SingularGram
from .rmt import SpectrumParams, mp_nodes, mp_quantile, overlap, shat_of_sbar
from .simulator import TeacherSpec, _orthonormal, _rng, make_dataset, ta_flow_trace, TrainingSet
from .theory import TheoryConfig, minimize_over_time, optimal_stopping

GRAM_TOL = 1e-10
ZERO_MODE_RTOL = 1e-6  # eigenvalues below 1e-12 of the largest are round-off
SIM_TIMES = np.concatenate([[0.0], np.logspace(-2, 2, 300)])


def _assembled(task_a: TeacherSpec, task_b: TeacherSpec) -> np.ndarray:
    return np.vstack([task_a.w_bar, task_b.w_bar])


def composite_modes_via_q(s_a, s_b, q_matrix):
    """Composite singular values and eigen-coefficients from the SNRs and ``Q`` alone.

    Returns ``(sigma, b, g_inv_half)``: ``sigma`` descending, ``b`` the
    orthonormal eigenvectors of ``G^(1/2) S^2 G^(1/2)`` as columns and
    ``G^(-1/2)`` (pseudo-inverse square root), so the composite input vectors
    are ``[V_A V_B] @ g_inv_half @ b``.
    """
    s_a = np.atleast_1d(np.asarray(s_a, float))
    s_b = np.atleast_1d(np.asarray(s_b, float))
    q = np.atleast_2d(np.asarray(q_matrix, float))
    if q.shape != (len(s_a), len(s_b)):
        raise DimError(f"Q has shape {q.shape}, expected {(len(s_a), len(s_b))}")
    g = np.block([[np.eye(len(s_a)), q], [q.T, np.eye(len(s_b))]])
    lam_g, vec_g = np.linalg.eigh(g)
    if lam_g[0] < -GRAM_TOL * max(1.0, lam_g[-1]):
        raise SingularGram(f"Q is not an overlap matrix of unit vectors (Gram eigenvalue {lam_g[0]:.3g})")
    lam_g = np.clip(lam_g, 0.0, None)
    pos = lam_g > GRAM_TOL * lam_g[-1]
    g_half = (vec_g * np.sqrt(lam_g)) @ vec_g.T
    inv = np.where(pos, 1.0 / np.sqrt(np.where(pos, lam_g, 1.0)), 0.0)
    g_inv_half = (vec_g * inv) @ vec_g.T
    s2 = np.concatenate([s_a, s_b]) ** 2
    m = g_half @ (s2[:, None] * g_half)
    lam, b = np.linalg.eigh(0.5 * (m + m.T))
    order = np.argsort(lam)[::-1]
    lam, b = np.clip(lam[order], 0.0, None), b[:, order]
    return np.sqrt(lam), b, g_inv_half


@dataclass
class TransferPair:
    task_a: TeacherSpec
    task_b: TeacherSpec
    q_matrix: np.ndarray = field(init=False)
    composite: TeacherSpec = field(init=False)

    def __post_init__(self):
        a, b = self.task_a, self.task_b
        if a.n1 != b.n1:
            raise DimError(f"tasks need a shared input dimension, got {a.n1} and {b.n1}")
        if a.n3 != b.n3:
            raise DimError(f"tasks need equal output dimensions, got {a.n3} and {b.n3}")
        self.q_matrix = a.v_in.T @ b.v_in
        self.composite = composite_teacher(a, b)

    @property
    def n1(self) -> int:
        return self.task_a.n1

    @property
    def n3(self) -> int:
        return self.task_a.n3

    @property
    def composite_aspect(self) -> float:
        return 2 * self.n3 / self.n1


def composite_teacher(task_a: TeacherSpec, task_b: TeacherSpec) -> TeacherSpec:
    """SVD of the stacked teacher ``[W_A; W_B]``, assembled through ``Q``."""
    if task_a.n1 != task_b.n1 or task_a.n3 != task_b.n3:
        raise DimError("tasks need a shared input dimension and equal output dimensions")
    if 2 * task_a.n3 > task_a.n1:
        raise AspectError(f"composite aspect 2*{task_a.n3}/{task_a.n1} exceeds 1")
    q = task_a.v_in.T @ task_b.v_in
    sigma, b, g_inv_half = composite_modes_via_q(task_a.snrs, task_b.snrs, q)
    keep = sigma > ZERO_MODE_RTOL * max(sigma[0], 1e-300)
    sigma, b = sigma[keep], b[:, keep]
    v_stack = np.hstack([task_a.v_in, task_b.v_in])
    v = v_stack @ g_inv_half @ b
    v /= np.linalg.norm(v, axis=0)
    u = _assembled(task_a, task_b) @ v / sigma
    # re-orthonormalise against rounding; columns are orthogonal by construction
    u, _ = np.linalg.qr(u)
    u *= np.sign(np.sum(u * (_assembled(task_a, task_b) @ v), axis=0))
    return TeacherSpec(u, sigma, v, task_a.sigma_z)


def rank1_pair(n1: int, n3: int, snr_a: float, snr_b: float, q: float, sigma_z: float = 1.0, seed=None):
    """Two rank-1 tasks whose input vectors have overlap ``q``."""
    if not -1.0 <= q <= 1.0:
        raise ValueError("q must lie in [-1, 1]")
    rng = _rng(seed)
    v = _orthonormal(rng, n1, 2)
    va = v[:, :1]
    vb = q * v[:, :1] + np.sqrt(max(1.0 - q * q, 0.0)) * v[:, 1:]
    ua, ub = _orthonormal(rng, n3, 1), _orthonormal(rng, n3, 1)
    ta = TeacherSpec(ua, [snr_a], va, sigma_z)
    tb = TeacherSpec(ub, [snr_b], vb, sigma_z)
    return TransferPair(ta, tb)


@dataclass
class TransferResult:
    eps_a_alone: float
    eps_a_joint: float
    benefit: float
    method: str
    ci_halfwidth: float = 0.0
    t_alone: float = float("nan")
    t_joint: float = float("nan")


def _head_a_weights(s_a, s_b, q):
    """Composite SNRs and the share ``w_c`` of each composite output vector on head A."""
    sigma, b, g_inv_half = composite_modes_via_q(s_a, s_b, q)
    keep = sigma > ZERO_MODE_RTOL * max(sigma[0], 1e-300)
    sigma, b = sigma[keep], b[:, keep]
    ra = len(np.atleast_1d(s_a))
    q = np.atleast_2d(q)
    # V_A^T v_c = [I, Q] G^(-1/2) b_c ; normalise v_c through its Gram norm
    g = np.block([[np.eye(ra), q], [q.T, np.eye(q.shape[1])]])
    coef = g_inv_half @ b
    norms = np.sqrt(np.einsum("ij,ij->j", coef, g @ coef))
    va_vc = np.hstack([np.eye(ra), q]) @ coef / norms
    w = np.sum((np.asarray(s_a, float)[:, None] * va_vc) ** 2, axis=0) / sigma**2
    return sigma, np.clip(w, 0.0, 1.0)


def head_test_error_curve(times, s_a, s_b, q, n1: int, n3: int, n2: int, dyn: DynamicsParams,
                          sigma_z: float = 1.0):
    """Theoretical test error of head A when a rank-``n2`` TA student learns both tasks."""
    times = np.atleast_1d(np.asarray(times, float))
    n_out = 2 * n3
    params = SpectrumParams(n_out / n1, sigma_z)
    sigma, w = _head_a_weights(s_a, s_b, q)
    o = overlap(sigma, params)
    o_u, ovl = np.atleast_1d(o.o_u), np.atleast_1d(o.o)
    shat = np.atleast_1d(shat_of_sbar(sigma, params))
    k = len(sigma)
    if k > n2:
        raise DimError(f"student rank {n2} is below the {k} composite teacher modes")
    energy = n_out * sigma_z**2 + float(np.sum(sigma**2))
    count = n_out - k
    kappa = (energy - float(np.sum(shat**2))) / count
    bulk = SpectrumParams(params.aspect, float(np.sqrt(kappa))) if kappa > 0 else params
    s = learning_curves(times, shat, dyn)
    half = n3 / n_out
    num = np.sum(s**2 * (o_u**2 * w + (1.0 - o_u**2) * half), axis=1)
    num -= 2.0 * np.sum(s * sigma * ovl * w, axis=1)
    num += float(np.sum(np.square(s_a)))
    if n2 > k:
        f = mp_quantile(bulk, (n_out - n2) / count)
        x, wt = mp_nodes((f, bulk.upper_edge), bulk, n=2001)
        if wt.sum() > 0:
            sb = learning_curves(times, x, dyn)
            num += (n2 - k) * half * (sb**2 @ wt) / wt.sum()
    return num / float(np.sum(np.square(s_a)))


def transfer_benefit_theory(pair: TransferPair, dyn: DynamicsParams | None = None, sigma_z: float | None = None,
                            n2: int | None = None) -> TransferResult:
    """Benefit of joint training on task A's optimally stopped test error, from theory.

    Semi-analytic: each composite mode's output vector is split between the two
    heads by its teacher share (scaled by the output overlap) plus an even
    split of its noise part; cross-mode overlaps are neglected.
    """
    if pair.composite_aspect > 1:
        raise AspectError(f"composite aspect {pair.composite_aspect:.3g} exceeds 1")
    dyn = dyn or DynamicsParams(eps=1e-3)
    sigma_z = pair.task_a.sigma_z if sigma_z is None else sigma_z
    n2 = pair.n3 if n2 is None else n2
    s_a, s_b = pair.task_a.snrs, pair.task_b.snrs
    t_alone, alone = optimal_stopping(TheoryConfig(tuple(s_a), pair.n1, pair.n3, n2, dyn, noise_scale=sigma_z))
    t_joint, joint = minimize_over_time(
        lambda t: head_test_error_curve(t, s_a, s_b, pair.q_matrix, pair.n1, pair.n3, n2, dyn, sigma_z), dyn.tau
    )
    return TransferResult(alone, joint, alone - joint, "theory", 0.0, t_alone, t_joint)


def _split_task_a(data: TrainingSet, task_a: TeacherSpec) -> TrainingSet:
    n3 = task_a.n3
    return TrainingSet(data.x, data.y[:n3], task_a, data.mode)


def transfer_benefit_sim(pair: TransferPair, n_seeds: int = 20, dyn: DynamicsParams | None = None,
                         n2: int | None = None, seed=0, times=None, confidence: float = 0.95) -> TransferResult:
    """Benefit measured on simulated data, with a seed-bootstrap confidence half-width.

    Each seed draws one composite data set; task A alone is trained on the
    first ``n3`` rows of that same data so the noise is shared. Students are
    training-aligned and follow exact gradient flow (:func:`ta_flow_trace`).
    """
    dyn = dyn or DynamicsParams(eps=1e-3)
    n2 = pair.n3 if n2 is None else n2
    times = SIM_TIMES * dyn.tau if times is None else np.asarray(times, float)
    n3 = pair.n3
    head_a = np.zeros(2 * n3)
    head_a[:n3] = 1.0
    alone_v, joint_v = [], []
    for child in np.random.SeedSequence(seed).spawn(n_seeds):
        data = make_dataset(pair.composite, seed=np.random.default_rng(child))
        jt = ta_flow_trace(data, n2, dyn, times, projector=head_a)
        at = ta_flow_trace(_split_task_a(data, pair.task_a), n2, dyn, times)
        joint_v.append(np.min(jt.test_errors))
        alone_v.append(np.min(at.test_errors))
    alone_v, joint_v = np.array(alone_v), np.array(joint_v)
    diffs = alone_v - joint_v
    return TransferResult(float(alone_v.mean()), float(joint_v.mean()), float(diffs.mean()), "simulation",
                          _ci_halfwidth(diffs, confidence, seed))


def _ci_halfwidth(values, confidence: float, seed) -> float:
    values = np.asarray(values, float)
    if len(values) < 2 or np.ptp(values) == 0:
        return 0.0
    res = stats.bootstrap((values,), np.mean, confidence_level=confidence, n_resamples=2000,
                          method="percentile", random_state=np.random.default_rng(seed))
    return float(0.5 * (res.confidence_interval.high - res.confidence_interval.low))
