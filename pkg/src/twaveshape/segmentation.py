"""R-peak detection, RR series, and aligned T-wave window extraction."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DetectionError,
    EmptyMatrixError,
    InsufficientDataError,
    InvalidWindowError,
)
from .ingest import EcgRecord

log = logging.getLogger(__name__)

REFRACTORY_MS = 200.0
INTEGRATION_MS = 120.0


@dataclass(frozen=True)
class BeatMatrix:
    """Aligned T-wave segments: one row per beat on a shared time axis."""

    values: np.ndarray       # (I, J) mV
    time_axis: np.ndarray    # (J,) ms offsets from the R peak
    r_indices: np.ndarray    # (I,) sample index of each beat's R peak
    window: tuple            # (w_start, w_end) ms
    fs: float

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "time_axis", np.asarray(self.time_axis, dtype=float))
        object.__setattr__(self, "r_indices", np.asarray(self.r_indices, dtype=int))
        if self.values.ndim != 2 or self.values.shape[0] < 1:
            raise ValueError("values must be a non-empty I x J matrix")
        if self.values.shape[1] != self.time_axis.size:
            raise ValueError("time axis length must match matrix columns")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("beat matrix contains non-finite values")
        if np.any(np.diff(self.time_axis) <= 0):
            raise ValueError("time axis must be strictly increasing")

    @property
    def n_beats(self) -> int:
        return self.values.shape[0]

    @property
    def n_points(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class RrSeries:
    """Beat-to-beat intervals in ms; indices[k] is the beat ending interval k."""

    rr: np.ndarray       # (I-1,) ms
    indices: np.ndarray  # (I-1,) beat index terminating each interval

    def __post_init__(self):
        object.__setattr__(self, "rr", np.asarray(self.rr, dtype=float))
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=int))
        if np.any(self.rr <= 0):
            raise ValueError("all RR intervals must be positive")


def detect_r_peaks(record: EcgRecord) -> np.ndarray:
    """Locate R peaks; attached annotations take precedence over detection.

    Band emphasis is first-difference squaring followed by a 120 ms
    moving-average integration; candidate maxima must clear 0.5x the
    running median of accepted peak heights, with a 200 ms refractory gap.
    Returned indices are refined to the local raw-signal maximum.
    """
    if record.annotations is not None:
        return np.asarray(record.annotations, dtype=int)
    x = record.samples
    fs = record.fs
    if x.size < 2 * fs:
        raise DetectionError("record shorter than 2 s; supply annotations instead")
    energy = np.diff(x) ** 2
    win = max(1, int(round(INTEGRATION_MS * fs / 1000.0)))
    kernel = np.ones(win) / win
    integ = np.convolve(energy, kernel, mode="same")
    if integ.max() <= 0:
        raise DetectionError("flat signal: no peaks found; supply annotations instead")

    refractory = int(round(REFRACTORY_MS * fs / 1000.0))
    bootstrap = 0.5 * np.percentile(integ, 99)
    is_max = np.zeros(integ.size, dtype=bool)
    is_max[1:-1] = (integ[1:-1] >= integ[:-2]) & (integ[1:-1] > integ[2:])
    candidates = np.flatnonzero(is_max)

    accepted = []
    heights: list[float] = []
    for c in candidates:
        threshold = 0.5 * np.median(heights[-8:]) if heights else bootstrap
        if integ[c] < threshold:
            continue
        if accepted and c - accepted[-1] < refractory:
            # within refractory: keep the stronger of the two
            if integ[c] > integ[accepted[-1]]:
                accepted[-1] = c
                heights[-1] = float(integ[c])
            continue
        accepted.append(int(c))
        heights.append(float(integ[c]))
    if not accepted:
        raise DetectionError("no peaks found; supply annotations instead")

    # refine each integrated-energy peak to the nearby raw-signal apex
    half = win
    peaks = []
    for c in accepted:
        lo = max(0, c - half)
        hi = min(x.size, c + half + 1)
        peaks.append(lo + int(np.argmax(x[lo:hi])))
    peaks = sorted(set(peaks))
    return np.asarray(peaks, dtype=int)


def extract_beat_matrix(
    record: EcgRecord, peaks: Sequence[int], window: tuple
) -> BeatMatrix:
    """Cut the identical (w_start, w_end) ms window after every R peak.

    Beats whose window would overrun the record are dropped (and logged);
    the matrix must stay rectangular.
    """
    w_start, w_end = float(window[0]), float(window[1])
    if w_start >= w_end:
        raise InvalidWindowError(f"window start {w_start} must precede end {w_end}")
    fs = record.fs
    step_ms = 1000.0 / fs
    n_pts = int(round((w_end - w_start) * fs / 1000.0)) + 1
    time_axis = w_start + step_ms * np.arange(n_pts)
    offsets = np.round(time_axis * fs / 1000.0).astype(int)

    rows = []
    kept = []
    dropped = []
    for p in peaks:
        idx = int(p) + offsets
        if idx[0] < 0 or idx[-1] >= record.samples.size:
            dropped.append(int(p))
            continue
        rows.append(record.samples[idx])
        kept.append(int(p))
    if dropped:
        log.warning("dropped %d beat(s) with out-of-range windows: %s",
                    len(dropped), dropped)
    if not rows:
        raise EmptyMatrixError("no beat window fits inside the record")
    return BeatMatrix(
        values=np.vstack(rows), time_axis=time_axis,
        r_indices=np.asarray(kept), window=(w_start, w_end), fs=fs,
    )


def rr_series(peaks: Sequence[int], fs: float) -> RrSeries:
    """RR intervals in ms between successive peaks."""
    peaks = np.asarray(peaks, dtype=int)
    if peaks.size < 2:
        raise InsufficientDataError("need at least 2 peaks for an RR series")
    rr = np.diff(peaks) * 1000.0 / fs
    return RrSeries(rr=rr, indices=np.arange(1, peaks.size))
