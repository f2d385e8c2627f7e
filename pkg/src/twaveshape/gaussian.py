"""Two-Gaussian baseline: independent per-beat waveform fits.

Each T-wave is fitted as g(t) = sum_i lam_i * exp(-(t - mu_i)^2 / (2 s_i))
by least squares.  There is no shared reference curve here by design: the
per-beat independence (and the resulting parameter instability) is exactly
what this baseline demonstrates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .analysis import ClusterReport, kmeans_features
from .errors import InsufficientDataError

MU_SCALE = 10.0    # ms per simplex unit
LAM_SCALE = 0.1    # mV per simplex unit
XATOL = 1e-6
MAX_ITER = 4000


@dataclass(frozen=True)
class GaussianPair:
    """Unnormalized two-Gaussian decomposition of one beat, mu1 <= mu2."""

    lam1: float    # mV
    var1: float    # ms^2
    mu1: float     # ms
    lam2: float
    var2: float
    mu2: float
    rss: float
    converged: bool = True

    def __post_init__(self):
        if self.var1 <= 0 or self.var2 <= 0:
            raise ValueError("variances must be positive")
        if self.mu1 > self.mu2:
            raise ValueError("components must be ordered mu1 <= mu2")

    def as_array(self) -> np.ndarray:
        return np.array([self.lam1, self.var1, self.mu1,
                         self.lam2, self.var2, self.mu2])

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        return (self.lam1 * np.exp(-((t - self.mu1) ** 2) / (2 * self.var1))
                + self.lam2 * np.exp(-((t - self.mu2) ** 2) / (2 * self.var2)))


def _local_maxima(y: np.ndarray) -> np.ndarray:
    interior = (y[1:-1] >= y[:-2]) & (y[1:-1] > y[2:])
    return np.flatnonzero(interior) + 1


def _initial_guess(beat, t):
    span = float(t[-1] - t[0])
    sigma0 = span / 6.0
    apex = int(np.argmax(beat))
    peaks = _local_maxima(beat)
    # keep only reasonably separated, reasonably tall maxima
    tall = peaks[beat[peaks] > 0.25 * beat[apex]]
    separated = [p for p in tall if abs(t[p] - t[apex]) >= span / 8.0 and p != apex]
    if separated:
        second = max(separated, key=lambda p: beat[p])
        mus = sorted([float(t[apex]), float(t[second])])
        lams = [0.8 * float(beat[np.argmin(np.abs(t - mu))]) for mu in mus]
    else:
        mus = [float(t[apex]) - sigma0, float(t[apex]) + sigma0]
        lams = [0.6 * float(beat[apex])] * 2
    return lams, [sigma0**2, sigma0**2], mus


def fit_gaussian_pair(beat, time_axis, seed: int = 0) -> GaussianPair:
    """Least-squares two-Gaussian fit of one beat (simplex search)."""
    beat = np.asarray(beat, dtype=float)
    t = np.asarray(time_axis, dtype=float)
    if beat.size != t.size or beat.size < 12:
        raise InsufficientDataError("beat needs >= 12 aligned points")

    def unpack(z):
        return (z[0] * LAM_SCALE, math.exp(z[1]), z[2] * MU_SCALE,
                z[3] * LAM_SCALE, math.exp(z[4]), z[5] * MU_SCALE)

    def objective(z):
        l1, v1, m1, l2, v2, m2 = unpack(z)
        g = (l1 * np.exp(-((t - m1) ** 2) / (2 * v1))
             + l2 * np.exp(-((t - m2) ** 2) / (2 * v2)))
        r = beat - g
        return float(np.dot(r, r))

    lams, vars0, mus = _initial_guess(beat, t)
    z0 = np.array([
        lams[0] / LAM_SCALE, math.log(vars0[0]), mus[0] / MU_SCALE,
        lams[1] / LAM_SCALE, math.log(vars0[1]), mus[1] / MU_SCALE,
    ])
    res = minimize(
        objective, z0, method="Nelder-Mead",
        options={"xatol": XATOL, "fatol": 1e-10,
                 "maxiter": MAX_ITER, "maxfev": 2 * MAX_ITER},
    )
    l1, v1, m1, l2, v2, m2 = unpack(res.x)
    if m1 > m2:
        l1, v1, m1, l2, v2, m2 = l2, v2, m2, l1, v1, m1
    return GaussianPair(lam1=l1, var1=v1, mu1=m1, lam2=l2, var2=v2, mu2=m2,
                        rss=float(res.fun), converged=bool(res.success))


def fit_gaussian_all(x_values, time_axis, seed: int = 0) -> list[GaussianPair]:
    """Independent two-Gaussian fit of every row of a beat matrix."""
    return [fit_gaussian_pair(row, time_axis, seed=seed) for row in x_values]


def classify_by_mu(
    pairs: Sequence[GaussianPair],
    labels,
    component: int = 2,
    seed: int = 0,
) -> ClusterReport:
    """k-means (k=2) on one Gaussian location parameter vs given labels."""
    if len(pairs) < 2:
        raise InsufficientDataError("need at least 2 beats to classify")
    if component not in (1, 2):
        raise ValueError("component must be 1 or 2")
    mus = np.array([p.mu1 if component == 1 else p.mu2 for p in pairs])
    return kmeans_features(mus, 2, labels=labels, seed=seed)
