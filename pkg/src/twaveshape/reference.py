"""Reference curve construction: centered spline through the pointwise mean.

The curve is centered so its apex sits at t = 0 and its mean value is 0;
the evaluation support extends one full knot span beyond the knots on each
side, with linear extrapolation continuing the boundary slope.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import IncompatibleSupportError, OutOfSupportError, TooFewPointsError
from .segmentation import BeatMatrix

# curvature of the soft quadratic penalty applied beyond the support during
# fitting (mV per ms^2); keeps the least-squares objective finite everywhere
PENALTY_CURVATURE = 0.01


@dataclass(frozen=True)
class ReferenceCurve:
    """Centered common T-wave shape with extended evaluation support."""

    knots: np.ndarray     # (J,) ms, centered
    values: np.ndarray    # (J,) mV, centered
    center_t: float       # ms subtracted from the raw knot times
    center_v: float       # mV subtracted from the raw values
    support: tuple        # (lo, hi) ms
    spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        if knots.size < 4:
            raise TooFewPointsError(
                f"cubic spline needs >= 4 knots, got {knots.size}"
            )
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        lo, hi = self.support
        if not (lo < knots[0] and hi > knots[-1]):
            raise ValueError("support must strictly contain the knot range")
        spline = CubicSpline(knots, values, bc_type="natural")
        object.__setattr__(self, "spline", spline)
        object.__setattr__(
            self, "_slopes",
            (float(spline(knots[0], 1)), float(spline(knots[-1], 1))),
        )

    def evaluate(self, t):
        """Spline value inside the knots, linear extrapolation out to support."""
        t_arr = np.asarray(t, dtype=float)
        lo, hi = self.support
        if np.any(t_arr < lo) or np.any(t_arr > hi):
            bad = t_arr[(t_arr < lo) | (t_arr > hi)]
            raise OutOfSupportError(
                f"t={np.atleast_1d(bad)[0]:g} ms outside support [{lo:g}, {hi:g}]"
            )
        out = self._eval_extended(t_arr)
        return float(out) if np.isscalar(t) else out

    def _eval_extended(self, t_arr):
        """Linear extrapolation beyond the knots, no support check."""
        s_lo, s_hi = self._slopes
        out = self.spline(np.clip(t_arr, self.knots[0], self.knots[-1]))
        below = t_arr < self.knots[0]
        above = t_arr > self.knots[-1]
        out = np.where(below, self.values[0] + s_lo * (t_arr - self.knots[0]), out)
        out = np.where(above, self.values[-1] + s_hi * (t_arr - self.knots[-1]), out)
        return out

    def evaluate_penalized(self, t):
        """Fitting-time evaluation: beyond the support the linear extension
        picks up a quadratic penalty so the objective stays finite and grows."""
        t_arr = np.asarray(t, dtype=float)
        out = self._eval_extended(t_arr)
        lo, hi = self.support
        excess = np.maximum(lo - t_arr, 0.0) + np.maximum(t_arr - hi, 0.0)
        return out + PENALTY_CURVATURE * excess**2

    def in_support(self, t) -> np.ndarray:
        t_arr = np.asarray(t, dtype=float)
        lo, hi = self.support
        return (t_arr >= lo) & (t_arr <= hi)

    @property
    def apex_value(self) -> float:
        return float(self.values.max())


def curve_from_samples(t: Sequence[float], v: Sequence[float],
                       extension: float | None = None) -> ReferenceCurve:
    """Center sampled curve data and build a ReferenceCurve.

    Horizontal center is the apex knot; vertical center is the mean value.
    The support extends by one full knot span each side unless overridden.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    if t.size < 4:
        raise TooFewPointsError(f"cubic spline needs >= 4 knots, got {t.size}")
    center_t = float(t[int(np.argmax(v))])
    center_v = float(v.mean())
    knots = t - center_t
    values = v - center_v
    span = float(knots[-1] - knots[0])
    ext = span if extension is None else float(extension)
    support = (float(knots[0] - ext), float(knots[-1] + ext))
    return ReferenceCurve(knots=knots, values=values, center_t=center_t,
                          center_v=center_v, support=support)


def build_reference(x: BeatMatrix) -> ReferenceCurve:
    """Reference curve from the column means of a beat matrix."""
    mean_curve = x.values.mean(axis=0)
    return curve_from_samples(x.time_axis, mean_curve)


def build_hyper_reference(refs: Sequence[ReferenceCurve]) -> ReferenceCurve:
    """Average a set of reference curves into one common curve.

    The inputs are resampled on a shared grid spanning the intersection of
    their knot spans, averaged pointwise, then centered and splined exactly
    as build_reference does.
    """
    if not refs:
        raise ValueError("need at least one reference curve")
    lo = max(float(r.knots[0]) for r in refs)
    hi = min(float(r.knots[-1]) for r in refs)
    if lo >= hi:
        raise IncompatibleSupportError(
            f"reference supports do not overlap: [{lo:g}, {hi:g}]"
        )
    step = min(float(np.median(np.diff(r.knots))) for r in refs)
    grid = np.arange(lo, hi + 0.5 * step, step)
    stacked = np.vstack([r.evaluate(grid) for r in refs])
    return curve_from_samples(grid, stacked.mean(axis=0))


def write_reference_csv(curve: ReferenceCurve, path) -> None:
    """Serialize a reference curve: metadata comments then t,value knot rows."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"# center_t={curve.center_t!r}\n")
        fh.write(f"# center_v={curve.center_v!r}\n")
        fh.write(f"# support={curve.support[0]!r},{curve.support[1]!r}\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "value"])
        for t, v in zip(curve.knots, curve.values):
            writer.writerow([repr(float(t)), repr(float(v))])


def read_reference_csv(path) -> ReferenceCurve:
    """Inverse of write_reference_csv; reconstructs the identical curve."""
    path = Path(path)
    meta = {}
    knots, values = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
                continue
            if not line or line.startswith("t,"):
                continue
            t_str, v_str = line.split(",")
            knots.append(float(t_str))
            values.append(float(v_str))
    support = tuple(float(s) for s in meta["support"].split(","))
    return ReferenceCurve(
        knots=np.asarray(knots), values=np.asarray(values),
        center_t=float(meta["center_t"]), center_v=float(meta["center_v"]),
        support=support,
    )
