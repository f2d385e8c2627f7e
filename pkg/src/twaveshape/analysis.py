"""Downstream analyses over fitted beat parameters.

Covers the boundary-robustness sweep, the quadratic QT relations, k-means
beat clustering, power spectral density of parameter series, lagged RR
correlations, and multivariate outlier detection.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import signal as sp_signal
from scipy.stats import chi2
from sklearn.cluster import KMeans

from .errors import (
    ConstraintError,
    DegenerateCovarianceError,
    InfeasibleError,
    InsufficientDataError,
    InvalidWindowError,
    NoCrossingError,
)
from .estimation import fit_all
from .ingest import EcgRecord
from .model import FitResult, ShapeParams
from .reference import build_reference
from .segmentation import RrSeries, extract_beat_matrix

PARAM_NAMES = ("u", "d", "m", "h")

# beats with |h| below this are excluded from relative-h summaries,
# where the ratio is numerically meaningless
H_RELATIVE_FLOOR = 1e-3  # mV


def params_matrix(results: Sequence[FitResult]) -> np.ndarray:
    """(I, 4) array of (u, d, m, h) across beats."""
    return np.vstack([r.params.as_array() for r in results])


def param_series(results: Sequence[FitResult], name: str) -> np.ndarray:
    return params_matrix(results)[:, PARAM_NAMES.index(name)]


# ---------------------------------------------------------------------------
# boundary robustness
# ---------------------------------------------------------------------------

@dataclass
class RobustnessReport:
    """Parameter sensitivity to shifting the T-wave window by s ms a side."""

    shifts: list
    r_indices: np.ndarray                 # beats common to all windows
    rel_delta: dict                       # param -> (I, S); h rows may be NaN
    m_delta_ms: np.ndarray                # (I, S) absolute delta of m
    median_rel: dict                      # param -> (S,)
    stdev_rel: dict                       # param -> (S,)
    m_abs_median: np.ndarray              # (S,)
    m_abs_stdev: np.ndarray               # (S,)
    h_excluded: int                       # beats dropped from relative-h rows


def robustness_sweep(
    record: EcgRecord,
    peaks,
    window: tuple,
    shifts: Sequence[float],
    k_policy: str = "rebuild",
    seed: int = 0,
) -> RobustnessReport:
    """Refit every beat on windows [a+s, b-s] and compare against [a, b].

    k_policy 'rebuild' reconstructs the reference per shifted window (the
    default: what rerunning the whole pipeline would do); 'reuse' keeps the
    baseline reference for every shift.
    """
    if k_policy not in ("rebuild", "reuse"):
        raise ValueError(f"unknown k_policy {k_policy!r}")
    a, b = float(window[0]), float(window[1])
    for s in shifts:
        if a + s >= b - s:
            raise InvalidWindowError(f"shift {s} inverts the window ({a}, {b})")

    def run(win, k_fixed=None):
        x = extract_beat_matrix(record, peaks, win)
        k = k_fixed if k_fixed is not None else build_reference(x)
        fits = fit_all(k, x, seed=seed)
        return x, k, {int(r): f for r, f in zip(x.r_indices, fits)}

    _, k0, base = run((a, b))
    per_shift = []
    for s in shifts:
        if s == 0:
            per_shift.append(base)
        else:
            _, _, fits = run((a + s, b - s), k0 if k_policy == "reuse" else None)
            per_shift.append(fits)

    common = sorted(set(base).intersection(*[set(f) for f in per_shift]))
    common_arr = np.asarray(common, dtype=int)
    n_beats, n_shifts = len(common), len(shifts)

    base_theta = np.vstack([base[r].params.as_array() for r in common])
    rel_delta = {p: np.zeros((n_beats, n_shifts)) for p in PARAM_NAMES}
    m_delta = np.zeros((n_beats, n_shifts))
    h_mask = np.abs(base_theta[:, 3]) >= H_RELATIVE_FLOOR
    h_excluded = int(n_beats - h_mask.sum())
    for si, fits in enumerate(per_shift):
        theta = np.vstack([fits[r].params.as_array() for r in common])
        delta = theta - base_theta
        m_delta[:, si] = delta[:, 2]
        for pi, p in enumerate(PARAM_NAMES):
            with np.errstate(divide="ignore", invalid="ignore"):
                rel = delta[:, pi] / base_theta[:, pi]
            if p == "h":
                rel = np.where(h_mask, rel, np.nan)
            rel_delta[p][:, si] = rel

    with warnings.catch_warnings():
        # all-NaN h columns (every beat under the floor) are a legal outcome
        warnings.simplefilter("ignore", RuntimeWarning)
        median_rel = {p: np.nanmedian(rel_delta[p], axis=0) for p in PARAM_NAMES}
        stdev_rel = {p: np.nanstd(rel_delta[p], axis=0, ddof=1)
                     for p in PARAM_NAMES}
    return RobustnessReport(
        shifts=list(shifts), r_indices=common_arr,
        rel_delta=rel_delta, m_delta_ms=m_delta,
        median_rel=median_rel, stdev_rel=stdev_rel,
        m_abs_median=np.median(m_delta, axis=0),
        m_abs_stdev=np.std(m_delta, axis=0, ddof=1),
        h_excluded=h_excluded,
    )


# ---------------------------------------------------------------------------
# QT relations for a quadratic reference
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticT:
    """Downward parabola K(t) = a*(t - b)^2 + c standing in for the T-wave."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a < 0 and self.c > 0):
            raise ConstraintError(f"need a < 0 and c > 0, got a={self.a}, c={self.c}")


def qt_quadratic(q: QuadraticT) -> float:
    """Right baseline crossing of the undeformed parabola: b + sqrt(-c/a)."""
    return q.b + math.sqrt(-q.c / q.a)


def _deformed_radicand(q: QuadraticT, theta: ShapeParams) -> float:
    return -q.c / q.a - theta.h / (q.a * math.sqrt(theta.u * theta.d))


def qt_deformed(q: QuadraticT, theta: ShapeParams) -> float:
    """Right baseline crossing of the deformed parabola (downhill branch).

    m + b/d + (1/d) * sqrt(-c/a - h / (a*sqrt(u*d))).  The downhill side is
    where the T-end lives; the uphill-branch expression is exposed
    separately by qt_deformed_uphill.
    """
    rad = _deformed_radicand(q, theta)
    if rad < 0:
        raise NoCrossingError("deformed T-wave never returns to baseline")
    return theta.m + q.b / theta.d + math.sqrt(rad) / theta.d


def qt_deformed_uphill(q: QuadraticT, theta: ShapeParams) -> float:
    """Uphill-branch analog of qt_deformed; not a QT, exposed for completeness."""
    rad = _deformed_radicand(q, theta)
    if rad < 0:
        raise NoCrossingError("deformed T-wave never returns to baseline")
    return theta.m + q.b / theta.u + math.sqrt(rad) / theta.u


# ---------------------------------------------------------------------------
# clustering
# ---------------------------------------------------------------------------

@dataclass
class ClusterReport:
    """K-means assignments plus best-permutation agreement with labels."""

    assignments: np.ndarray
    centers: np.ndarray               # (k, n_features), original units
    match_rate: Optional[float]
    inertia: float
    degenerate: bool = False          # zero-variance feature set


def _best_match_rate(assignments, labels) -> float:
    labels = np.asarray(labels)
    uniq = list(dict.fromkeys(labels.tolist()))
    clusters = sorted(set(int(c) for c in assignments))
    n = len(labels)
    best = 0.0
    # pad the label alphabet so each cluster can map somewhere
    alphabet = uniq + [object() for _ in range(max(0, len(clusters) - len(uniq)))]
    for perm in itertools.permutations(alphabet, len(clusters)):
        mapping = dict(zip(clusters, perm))
        hits = sum(1 for c, y in zip(assignments, labels) if mapping[int(c)] == y)
        best = max(best, hits / n)
    return best


def kmeans_features(
    features: np.ndarray,
    k: int,
    labels=None,
    seed: int = 0,
) -> ClusterReport:
    """Standardize columns, run k-means (k-means++ seeding, 10 restarts)."""
    feats = np.asarray(features, dtype=float)
    if feats.ndim == 1:
        feats = feats[:, None]
    n = feats.shape[0]
    if k < 1 or k > n:
        raise InfeasibleError(f"k={k} infeasible for {n} beats")
    mu = feats.mean(axis=0)
    sd = feats.std(axis=0)
    if np.all(sd == 0):
        assignments = np.zeros(n, dtype=int)
        match = None
        if labels is not None:
            counts = np.unique(np.asarray(labels), return_counts=True)[1]
            match = float(counts.max() / n)
        return ClusterReport(assignments=assignments, centers=mu[None, :],
                             match_rate=match, inertia=0.0, degenerate=True)
    sd_safe = np.where(sd == 0, 1.0, sd)
    z = (feats - mu) / sd_safe
    km = KMeans(n_clusters=k, init="k-means++", n_init=10, random_state=seed)
    assignments = km.fit_predict(z)
    centers = km.cluster_centers_ * sd_safe + mu
    match = _best_match_rate(assignments, labels) if labels is not None else None
    return ClusterReport(assignments=assignments, centers=centers,
                         match_rate=match, inertia=float(km.inertia_))


def kmeans_params(
    results: Sequence[FitResult],
    features: Sequence[str] = ("u", "d", "m", "h"),
    k: int = 2,
    labels=None,
    seed: int = 0,
) -> ClusterReport:
    """Cluster beats on a subset of the fitted shape parameters."""
    if not features:
        raise ValueError("need at least one feature")
    mat = params_matrix(results)
    cols = [PARAM_NAMES.index(f) for f in features]
    return kmeans_features(mat[:, cols], k, labels=labels, seed=seed)


# ---------------------------------------------------------------------------
# spectral analysis
# ---------------------------------------------------------------------------

def psd_series(series, beat_times) -> tuple[np.ndarray, np.ndarray]:
    """Hann-tapered periodogram of a per-beat series in real-time Hz.

    Beats land irregularly in time, so the series is first interpolated
    onto a uniform grid at the mean beat rate.
    """
    series = np.asarray(series, dtype=float)
    times = np.asarray(beat_times, dtype=float)
    if series.size != times.size:
        raise ValueError("series and beat_times must align")
    if series.size < 16:
        raise InsufficientDataError("need at least 16 beats for a PSD")
    dt = float(np.mean(np.diff(times)))
    grid = times[0] + dt * np.arange(series.size)
    x = np.interp(grid, times, series)
    x = x - x.mean()
    freqs, power = sp_signal.periodogram(
        x, fs=1.0 / dt, window="hann", detrend=False, scaling="density"
    )
    return freqs, power


# ---------------------------------------------------------------------------
# lagged RR correlation
# ---------------------------------------------------------------------------

@dataclass
class LagCorrelationTable:
    """Pearson r of each parameter series against RR at lags 0..max_lag."""

    lags: list
    r: dict                   # param -> (max_lag+1,) array, NaN when undefined
    argmax_lag: dict          # param -> lag with largest |r|


def _pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3 or x.std() == 0 or y.std() == 0:
        return float("nan")
    return float(np.corrcoef(x, y)[0, 1])


def lag_correlations(
    results: Sequence[FitResult],
    rr: RrSeries,
    max_lag: int,
) -> LagCorrelationTable:
    """Correlate each parameter at beat t with RR at beats t, t-1, ... t-max_lag.

    RR at beat t is the interval from the preceding R peak to beat t's peak.
    """
    n = len(results)
    if max_lag >= n - 2:
        raise InsufficientDataError(f"max_lag {max_lag} too large for {n} beats")
    mat = params_matrix(results)
    # rr_at_beat[i] = interval ending at beat i; beat 0 has none
    rr_at_beat = np.full(n, np.nan)
    for interval, beat_idx in zip(rr.rr, rr.indices):
        if 0 <= beat_idx < n:
            rr_at_beat[beat_idx] = interval

    lags = list(range(max_lag + 1))
    table = {}
    argmax = {}
    for pi, p in enumerate(PARAM_NAMES):
        rs = []
        for lag in lags:
            b = np.arange(1 + lag, n)
            x = mat[b, pi]
            y = rr_at_beat[b - lag]
            ok = np.isfinite(y)
            rs.append(_pearson(x[ok], y[ok]))
        rs = np.asarray(rs)
        table[p] = rs
        finite = np.isfinite(rs)
        argmax[p] = int(np.nanargmax(np.abs(rs))) if finite.any() else None
    return LagCorrelationTable(lags=lags, r=table, argmax_lag=argmax)


# ---------------------------------------------------------------------------
# multivariate outliers
# ---------------------------------------------------------------------------

def outlier_beats(
    results: Sequence[FitResult],
    threshold: float = 0.999,
) -> list[int]:
    """Beats whose (u, d, m, h) Mahalanobis distance^2 exceeds the chi2_4
    quantile at the given level."""
    mat = params_matrix(results)
    if mat.shape[0] < 10:
        raise InsufficientDataError("need at least 10 beats for outlier detection")
    mu = mat.mean(axis=0)
    cov = np.cov(mat, rowvar=False)
    if np.linalg.cond(cov) > 1e12:
        raise DegenerateCovarianceError(
            "parameter covariance is singular; try a feature subset"
        )
    inv = np.linalg.inv(cov)
    centered = mat - mu
    d2 = np.einsum("ij,jk,ik->i", centered, inv, centered)
    cut = chi2.ppf(threshold, df=mat.shape[1])
    return [int(i) for i in np.flatnonzero(d2 > cut)]
