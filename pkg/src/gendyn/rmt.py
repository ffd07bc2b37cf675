"""Random-matrix predictions for a low-rank teacher buried in Gaussian noise.

The training covariance ``Sigma31 = W_bar + Z`` has an N3 x N1 noise matrix with
iid entries of variance ``scale**2 / N1``. Its bulk singular values follow the
Marchenko-Pastur law on ``scale * [1 - sqrt(A), 1 + sqrt(A)]`` and each teacher
mode above ``A**0.25`` produces an outlier with a predictable position and
singular-vector overlap.

All functions accept scalars or numpy arrays and return the same kind.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import EmptyRegion, NotDetectable

N_QUAD = 10_001  # Simpson nodes per region (odd)
MASS_TOL = 1e-12


@dataclass(frozen=True)
class SpectrumParams:
    """Aspect ratio ``A = N3/N1`` in (0, 1] and bulk scale ``sigma > 0``."""

    aspect: float
    scale: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.aspect <= 1.0):
            raise ValueError(f"aspect ratio must lie in (0, 1], got {self.aspect}")
        if not self.scale > 0.0:
            raise ValueError(f"bulk scale must be positive, got {self.scale}")

    @property
    def lower_edge(self) -> float:
        return self.scale * (1.0 - np.sqrt(self.aspect))

    @property
    def upper_edge(self) -> float:
        return self.scale * (1.0 + np.sqrt(self.aspect))

    @property
    def support(self) -> tuple[float, float]:
        return (self.lower_edge, self.upper_edge)

    @property
    def threshold(self) -> float:
        """Smallest detectable teacher singular value, in the same units as ``scale``."""
        return self.scale * self.aspect ** 0.25


class OverlapTriple(NamedTuple):
    o_u: float | np.ndarray
    o_v: float | np.ndarray
    o: float | np.ndarray


def _ret(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def detection_threshold(params: SpectrumParams) -> float:
    return params.threshold


def mp_density(shat, params: SpectrumParams):
    """Marchenko-Pastur density of bulk singular values (integrates to 1)."""
    a = params.aspect
    x = np.asarray(shat, dtype=float) / params.scale
    lo2 = (1.0 - np.sqrt(a)) ** 2
    hi2 = (1.0 + np.sqrt(a)) ** 2
    x2 = x * x
    inside = (x2 > lo2) & (x2 < hi2)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sqrt(np.clip((hi2 - x2) * (x2 - lo2), 0.0, None)) / (np.pi * a * x)
    if a == 1.0:
        # the 1/x pole cancels against sqrt(x2 - lo2) = x
        val = np.sqrt(np.clip(4.0 - x2, 0.0, None)) / np.pi
    return _ret(np.where(inside, val, 0.0) / params.scale)


def _theta(shat, params: SpectrumParams):
    # shat**2 / scale**2 = 1 + A + 2 sqrt(A) cos(theta); theta=0 is the upper edge
    a = params.aspect
    lam = (np.asarray(shat, dtype=float) / params.scale) ** 2
    return np.arccos(np.clip((lam - 1.0 - a) / (2.0 * np.sqrt(a)), -1.0, 1.0))


def _theta_weight(theta, aspect: float):
    c, r = 1.0 + aspect, 2.0 * np.sqrt(aspect)
    cos = np.cos(theta)
    if aspect == 1.0:
        return (1.0 - cos) / np.pi
    return r * r * (1.0 - cos) * (1.0 + cos) / (2.0 * np.pi * aspect * (c + r * cos))


def _simpson_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * h / 3.0


def mp_nodes(region, params: SpectrumParams, n: int = N_QUAD):
    """Quadrature nodes and weights for MP integrals over ``region``.

    Returns ``(shat, w)`` with ``sum(w * g(shat))`` approximating the integral of
    ``g`` against the MP density over the region; ``w.sum()`` is the region mass.
    """
    if n % 2 == 0:
        n += 1
    lo, hi = region
    lo = max(lo, params.lower_edge)
    hi = min(hi, params.upper_edge)
    if hi <= lo:
        return np.array([lo]), np.zeros(1)
    t_hi, t_lo = _theta(hi, params), _theta(lo, params)  # t_hi <= t_lo
    theta = np.linspace(t_hi, t_lo, n)
    w = _simpson_weights(n, (t_lo - t_hi) / (n - 1)) * _theta_weight(theta, params.aspect)
    shat = params.scale * np.sqrt(
        np.clip(1.0 + params.aspect + 2.0 * np.sqrt(params.aspect) * np.cos(theta), 0.0, None)
    )
    return shat, w


def mp_mass(region, params: SpectrumParams) -> float:
    return float(mp_nodes(region, params)[1].sum())


def mp_region_mean(g: Callable, region, params: SpectrumParams) -> float:
    """Conditional MP expectation of ``g(shat)`` given ``shat`` in ``region``."""
    x, w = mp_nodes(region, params)
    mass = w.sum()
    if mass < MASS_TOL:
        raise EmptyRegion(f"region {region} carries MP mass {mass:.3g}")
    gx = np.broadcast_to(np.asarray(g(x), dtype=float), x.shape)
    return float(np.dot(w, gx) / mass)


def mp_quantile(params: SpectrumParams, left_mass: float) -> float:
    """Point ``f`` of the support with ``left_mass`` of the MP mass below it."""
    if not 0.0 <= left_mass <= 1.0:
        raise ValueError(f"left_mass must lie in [0, 1], got {left_mass}")
    lo, hi = params.support
    if left_mass == 0.0:
        return lo
    if left_mass == 1.0:
        return hi
    a, b = lo, hi
    for _ in range(200):
        mid = 0.5 * (a + b)
        m = mp_mass((lo, mid), params)
        if abs(m - left_mass) < 1e-10 or b - a < 1e-15:
            break
        if m < left_mass:
            a = mid
        else:
            b = mid
    return mid


def shat_of_sbar(sbar, params: SpectrumParams):
    """Position of the training-data singular value produced by a teacher mode."""
    a, sig = params.aspect, params.scale
    x = np.asarray(sbar, dtype=float) / sig
    above = x > a ** 0.25
    xs = np.where(above, x, 1.0)
    out = np.sqrt((1.0 + xs**2) * (a + xs**2)) / xs
    return _ret(sig * np.where(above, out, 1.0 + np.sqrt(a)))


def sbar_of_shat(shat, params: SpectrumParams):
    """Inverse of :func:`shat_of_sbar` for outliers strictly above the bulk edge."""
    a, sig = params.aspect, params.scale
    y = np.asarray(shat, dtype=float) / sig
    if np.any(y <= 1.0 + np.sqrt(a)):
        raise NotDetectable(
            f"singular value(s) {np.atleast_1d(shat)[y.ravel() <= 1 + np.sqrt(a)]} "
            f"do not exceed the bulk edge {params.upper_edge:.6g}"
        )
    b = y * y - 1.0 - a
    x2 = 0.5 * (b + np.sqrt(np.clip(b * b - 4.0 * a, 0.0, None)))
    return _ret(sig * np.sqrt(x2))


def overlap(sbar, params: SpectrumParams) -> OverlapTriple:
    """Asymptotic output/input singular-vector overlaps of a teacher mode.

    ``o_u = |u_hat . u_bar|`` (output side, N3), ``o_v = |v_hat . v_bar|``
    (input side, N1) and ``o = o_u * o_v``.
    """
    a = params.aspect
    x = np.asarray(sbar, dtype=float) / params.scale
    above = x > a ** 0.25
    x2 = np.where(above, x * x, 1.0)
    out_sq = 1.0 - a * (1.0 + x2) / (x2 * (a + x2))
    in_sq = 1.0 - (a + x2) / (x2 * (1.0 + x2))
    o_u = np.where(above, np.sqrt(np.clip(out_sq, 0.0, 1.0)), 0.0)
    o_v = np.where(above, np.sqrt(np.clip(in_sq, 0.0, 1.0)), 0.0)
    return OverlapTriple(_ret(o_u), _ret(o_v), _ret(o_u * o_v))
