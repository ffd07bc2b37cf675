"""Learning curve of a single mode strength under gradient flow.

A training-aligned mode of an ``depth``-layer linear network (``depth - 1``
balanced weight matrices) obeys

    tau du/dt = (depth - 1) * u**(2 - 2/(depth - 1)) * (shat - u),  u(0) = eps.

Depth 3 has a logistic closed form, depth 5 has a closed-form time-to-reach
that is inverted by bisection, and every other depth is integrated numerically.
:func:`learning_curves` evaluates whole (time x mode) grids at once for the
theory module.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import InvalidInit, NonPositiveMode, OutOfRange

BISECT_RTOL = 1e-10
ODE_RTOL = 1e-10
ODE_ATOL = 1e-14
MASTER_ZMAX = 45.0
MASTER_NODES = 90_001


@dataclass(frozen=True)
class DynamicsParams:
    eps: float
    tau: float = 1.0
    depth: int = 3

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"initial mode strength must be positive, got {self.eps}")
        if not self.tau > 0:
            raise ValueError(f"time constant must be positive, got {self.tau}")
        if int(self.depth) != self.depth or self.depth < 3:
            raise ValueError(f"depth counts all layers and must be an integer >= 3, got {self.depth}")

    @property
    def n_weights(self) -> int:
        return int(self.depth) - 1


def _ret(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _check_modes(shat, params: DynamicsParams) -> np.ndarray:
    shat = np.asarray(shat, dtype=float)
    if np.any(shat <= 0):
        raise NonPositiveMode("training singular values must be positive")
    if np.any(params.eps >= shat):
        raise InvalidInit(f"eps={params.eps} must lie below every training singular value")
    return shat


def mode_ode_rhs(u, shat, params: DynamicsParams):
    k = params.n_weights
    u = np.asarray(u, dtype=float)
    return _ret(k * u ** (2.0 - 2.0 / k) * (shat - u) / params.tau)


def _depth5_antideriv(u, shat):
    # atanh(sqrt(u/shat)) / shat**1.5 - 1/(shat sqrt(u)), with atanh written via logs
    # so that it keeps full precision as u -> shat
    su, ss = np.sqrt(u), np.sqrt(shat)
    with np.errstate(divide="ignore"):
        atanh = 0.5 * (np.log1p(su / ss) - np.log((shat - u) / (ss * (ss + su))))
    return atanh / shat**1.5 - 1.0 / (shat * su)


def _t_of_s_generic(s, shat, params: DynamicsParams):
    k = params.n_weights
    s, shat = np.broadcast_arrays(np.asarray(s, float), np.asarray(shat, float))
    out = np.empty(s.shape)
    # integrate in z = log u, where the integrand is smooth down to tiny eps
    for idx in np.ndindex(s.shape):
        sh = shat[idx]
        val, _ = integrate.quad(
            lambda z: np.exp((2.0 / k - 1.0) * z) / (k * (sh - np.exp(z))),
            np.log(params.eps), np.log(s[idx]), epsabs=0.0, epsrel=1e-12, limit=400,
        )
        out[idx] = val
    return params.tau * out


def _t_of_s_unchecked(s, shat, params: DynamicsParams):
    eps, tau = params.eps, params.tau
    if params.depth == 3:
        with np.errstate(divide="ignore"):
            return tau / (2.0 * shat) * np.log((shat / eps - 1.0) / (shat / s - 1.0))
    if params.depth == 5:
        return 0.5 * tau * (_depth5_antideriv(s, shat) - _depth5_antideriv(eps, shat))
    return _t_of_s_generic(s, shat, params)


def t_of_s(s, shat, params: DynamicsParams):
    """Training time at which a mode starting at ``eps`` reaches strength ``s``."""
    shat = _check_modes(shat, params)
    s = np.asarray(s, dtype=float)
    if np.any(s < params.eps) or np.any(s >= shat):
        raise OutOfRange(f"mode strength must satisfy eps <= s < shat")
    return _ret(_t_of_s_unchecked(s, shat, params))


def _bisect_depth5(t, shat, params: DynamicsParams):
    t, shat = np.broadcast_arrays(np.asarray(t, float), np.asarray(shat, float))
    lo = np.full(t.shape, params.eps)
    hi = shat.copy()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        late = _t_of_s_unchecked(mid, shat, params) < t
        lo = np.where(late, mid, lo)
        hi = np.where(late, hi, mid)
        if np.all(hi - lo <= BISECT_RTOL * lo):
            break
    out = 0.5 * (lo + hi)
    # Newton polish: dt/ds = 1 / rhs(s), so t(s) is matched to rounding level
    fin = np.isfinite(t) & (t > 0)
    for _ in range(2):
        with np.errstate(invalid="ignore"):
            step = (t - _t_of_s_unchecked(out, shat, params)) * mode_ode_rhs(out, shat, params)
        ok = fin & np.isfinite(step)
        out = np.where(ok, np.clip(out + np.where(ok, step, 0.0), lo, hi), out)
    out = np.where(t <= 0, params.eps, out)
    return np.where(np.isinf(t), shat, out)


def _integrate_modes(t, shat, params: DynamicsParams):
    """Integrate the mode ODE for every entry of ``shat`` and report at times ``t``."""
    t = np.asarray(t, dtype=float)
    shat = np.asarray(shat, dtype=float)
    flat_t = t.ravel()
    finite = np.isfinite(flat_t)
    grid = np.unique(np.clip(flat_t[finite], 0.0, None))
    result = np.full((len(grid), shat.size), params.eps)
    if len(grid) and grid[-1] > 0:
        sh = shat.ravel()
        k = params.n_weights

        def rhs(_, u):
            return k * np.abs(u) ** (2.0 - 2.0 / k) * (sh - u) / params.tau

        sol = integrate.solve_ivp(
            rhs, (0.0, grid[-1]), np.full(sh.size, params.eps), method="LSODA",
            t_eval=grid, rtol=ODE_RTOL, atol=ODE_ATOL,
        )
        if not sol.success:
            raise RuntimeError(f"mode ODE integration failed: {sol.message}")
        result = sol.y.T
    return grid, result


@lru_cache(maxsize=None)
def _master_curve(k: int):
    """Time-to-reach table of the rescaled mode ODE dx/dT = k x**(2-2/k) (1 - x).

    Tabulated against z = logit(x), where dT/dz = x**(2/k - 1) / k is smooth.
    """
    # integrate outward from z = 0 so T keeps full relative precision where it is huge
    half = np.linspace(0.0, MASTER_ZMAX, MASTER_NODES // 2 + 1)
    right = integrate.cumulative_simpson(_master_rate(half, k), x=half, initial=0.0)
    left = -integrate.cumulative_simpson(_master_rate(-half, k), x=half, initial=0.0)
    z = np.concatenate([-half[:0:-1], half])
    T = np.concatenate([left[:0:-1], right])
    return z, T, CubicSpline(z, T)


def _master_rate(z, k: int):
    return np.exp((1.0 - 2.0 / k) * np.logaddexp(0.0, -z)) / k


def _rescaled_rise(dT, x0, k: int):
    """Solve T(x) = T(x0) + dT for rising modes (x0 < 1)."""
    z_grid, T_grid, spline = _master_curve(k)
    z0 = np.log(x0) - np.log1p(-x0)
    target = spline(np.clip(z0, z_grid[0], z_grid[-1])) + dT
    z = np.interp(target, T_grid, z_grid)
    for _ in range(4):
        z = np.clip(z - (spline(z) - target) / _master_rate(z, k), z_grid[0], z_grid[-1])
    return 1.0 / (1.0 + np.exp(-z))


def learning_curves(times, shat, params: DynamicsParams) -> np.ndarray:
    """Mode strengths ``s(t, shat)`` on the outer grid ``times x shat``.

    Unlike :func:`s_of_t` this accepts modes at or below ``eps`` (they relax
    down to ``shat``) and ``shat = 0`` (pure decay); the theory module needs
    both for bulk modes near the lower edge of the MP sea. Depths other than 3
    go through a tabulated master curve, accurate to about 1e-9 relative.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    shat = np.atleast_1d(np.asarray(shat, dtype=float))
    eps, tau = params.eps, params.tau
    T = times[:, None]
    inf = np.isinf(times)
    if params.depth == 3:
        with np.errstate(over="ignore", invalid="ignore"):
            decay = np.exp(-2.0 * shat * T / tau)
            out = shat / (1.0 + (shat / eps - 1.0) * decay)
        zero = shat <= 0
        if np.any(zero):
            out[:, zero] = eps / (1.0 + 2.0 * eps * T / tau)
        out[inf] = np.broadcast_to(np.maximum(shat, 0.0), out[inf].shape)
        return out
    k = params.n_weights
    out = np.empty((len(times), len(shat)))
    rising = shat > eps
    if np.any(rising):
        sh = shat[rising]
        finite_T = np.where(np.isinf(T), 0.0, np.clip(T, 0.0, None))
        dT = finite_T * sh ** (2.0 - 2.0 / k) / tau
        out[:, rising] = sh * _rescaled_rise(dT, eps / sh, k)
    rest = ~rising
    if np.any(rest):
        grid, vals = _integrate_modes(times, shat[rest], params)
        idx = np.searchsorted(grid, np.clip(np.where(inf, 0.0, times), 0.0, None))
        out[:, rest] = vals[idx]
    out[inf] = np.broadcast_to(np.maximum(shat, 0.0), out[inf].shape)
    return out


def s_of_t(t, shat, params: DynamicsParams):
    """Mode strength after training time ``t`` (``t = inf`` gives ``shat``)."""
    shat = _check_modes(shat, params)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("training time must be non-negative")
    tb, sb = np.broadcast_arrays(t, shat)
    if params.depth == 3:
        with np.errstate(over="ignore"):
            out = sb / (1.0 + (sb / params.eps - 1.0) * np.exp(-2.0 * sb * tb / params.tau))
        out = np.clip(out, params.eps, sb)  # rounding can leave the formula a hair below eps
    elif params.depth == 5:
        out = _bisect_depth5(tb, sb, params)
    else:
        out = np.empty(tb.shape)
        for idx in np.ndindex(tb.shape):
            out[idx] = learning_curves([tb[idx]], [sb[idx]], params)[0, 0]
    return _ret(out)


def transition_time(shat, params: DynamicsParams):
    """Half-rise time ``t`` with ``s(t) = shat/2``.

    For depth 3 this is ``tau/(2 shat) * ln(shat/eps - 1)``.
    """
    shat = _check_modes(shat, params)
    if params.depth == 3:
        return _ret(params.tau / (2.0 * shat) * np.log(shat / params.eps - 1.0))
    # a mode initialised above its half-height has already crossed it
    half = np.maximum(shat / 2.0, params.eps)
    return _ret(_t_of_s_unchecked(half, shat, params))
