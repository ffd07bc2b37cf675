"""Singular-value shrinkage: the best estimate reachable without gradient descent.

Outliers above the noise bulk are mapped back to the teacher strength they
came from and then shrunk by the overlap between data and teacher vectors;
everything inside the bulk is discarded.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimError, NoiseScaleUnknown, TooFewModes
from .rmt import SpectrumParams, mp_quantile, overlap, sbar_of_shat

DEFAULT_MARGIN = 0.02


@dataclass
class ShrinkageReport:
    detected: list  # (shat, inferred sbar, shrunk s) per outlier, descending
    bulk_edge: float
    estimate: np.ndarray
    scale: float = 1.0

    @property
    def n_detected(self) -> int:
        return len(self.detected)


def _check_shape(sigma31, params: SpectrumParams):
    m = np.asarray(sigma31, dtype=float)
    if m.ndim != 2:
        raise DimError("expected a matrix")
    n3, n1 = m.shape
    if n3 > n1:
        raise DimError(f"expected at most as many rows as columns, got {n3}x{n1}")
    if not np.isclose(n3 / n1, params.aspect, rtol=1e-9):
        raise DimError(f"matrix aspect {n3}/{n1} = {n3 / n1:.6g} does not match A = {params.aspect:.6g}")
    return m


def shrink_denoise(sigma31, params: SpectrumParams, margin: float = DEFAULT_MARGIN,
                   estimate_scale: bool = False) -> ShrinkageReport:
    """Keep outliers above ``(1 + margin)`` times the bulk edge, shrunk to ``sbar * O(sbar)``.

    Modes inside the margin band are zeroed along with the bulk: just-detectable
    modes have almost no overlap with the teacher.
    """
    m = _check_shape(sigma31, params)
    if margin < 0:
        raise ValueError("margin must be non-negative")
    if estimate_scale:
        try:
            sigma = estimate_noise_scale(m, params, margin)
        except TooFewModes as exc:
            raise NoiseScaleUnknown(str(exc)) from exc
        params = SpectrumParams(params.aspect, sigma)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    edge = params.upper_edge * (1.0 + margin)
    keep = np.nonzero(s > edge)[0]
    detected = []
    estimate = np.zeros_like(m)
    for i in keep:
        sbar = float(sbar_of_shat(s[i], params))
        shrunk = sbar * float(overlap(sbar, params).o)
        detected.append((float(s[i]), sbar, shrunk))
        estimate += shrunk * np.outer(u[:, i], vt[i])
    return ShrinkageReport(detected, float(edge), estimate, params.scale)


def estimate_noise_scale(sigma31, params: SpectrumParams, margin: float = DEFAULT_MARGIN) -> float:
    """Bulk scale from the median singular value, ignoring outlier candidates.

    Candidates are values above the edge implied by the current estimate; two
    passes settle the split. Exactly homogeneous of degree one in ``sigma31``.
    """
    m = _check_shape(sigma31, params)
    s = np.linalg.svd(m, compute_uv=False)
    unit = SpectrumParams(params.aspect)
    median_unit = mp_quantile(unit, 0.5)
    bulk = s
    for _ in range(2):
        sigma = np.median(bulk) / median_unit
        bulk = s[s <= sigma * unit.upper_edge * (1.0 + margin)]
        if len(bulk) < len(s) / 2:
            raise TooFewModes(f"only {len(bulk)} of {len(s)} singular values look like noise")
    sigma = float(np.median(bulk) / median_unit)
    if not sigma > 1e-12 * s[0]:
        raise TooFewModes("bulk singular values vanish; no noise to calibrate against")
    return sigma
