"""Four-parameter T-wave deformation of a reference curve.

A beat is modeled as sqrt(u*d) * K(u*(t - m)) + h on the uphill side
(t <= m) and sqrt(u*d) * K(d*(t - m)) + h on the downhill side (t > m).
Both branches meet at t = m, so the curve is continuous there.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .errors import OutOfSupportError
from .reference import ReferenceCurve


@dataclass(frozen=True)
class ShapeParams:
    """Per-beat deformation: uphill slope, downhill slope, location, shift."""

    u: float   # dimensionless, > 0
    d: float   # dimensionless, > 0
    m: float   # ms
    h: float   # mV

    def __post_init__(self):
        vals = (self.u, self.d, self.m, self.h)
        if not all(np.isfinite(vals)):
            raise ValueError(f"non-finite shape parameters: {vals}")
        if self.u <= 0 or self.d <= 0:
            raise ValueError(f"slope factors must be positive: u={self.u}, d={self.d}")

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.d, self.m, self.h])

    IDENTITY = None  # set below


ShapeParams.IDENTITY = ShapeParams(1.0, 1.0, 0.0, 0.0)


@dataclass(frozen=True)
class FitResult:
    """Estimated parameters plus fit diagnostics for one beat."""

    params: ShapeParams
    rss: float          # mV^2
    sigma: float        # mV, sqrt(rss / J)
    converged: bool
    iterations: int

    def __post_init__(self):
        if self.rss < 0 or self.sigma < 0:
            raise ValueError("rss and sigma must be nonnegative")


def _scaled_args(theta: ShapeParams, t):
    """Branch-scaled spline arguments u*(t-m) / d*(t-m)."""
    t_arr = np.asarray(t, dtype=float)
    shifted = t_arr - theta.m
    return np.where(shifted <= 0, theta.u * shifted, theta.d * shifted)


def deform(k: ReferenceCurve, theta: ShapeParams, t):
    """Evaluate the deformed reference at time t (centered frame, ms)."""
    t_arr = np.asarray(t, dtype=float)
    args = _scaled_args(theta, t_arr)
    inside = k.in_support(args)
    if not np.all(inside):
        bad_t = np.atleast_1d(t_arr)[~np.atleast_1d(inside)][0]
        branch = "uphill" if bad_t <= theta.m else "downhill"
        raise OutOfSupportError(
            f"{branch} branch argument outside reference support at t={bad_t:g} ms"
        )
    out = sqrt(theta.u * theta.d) * k.evaluate(args) + theta.h
    return float(out) if np.isscalar(t) else out


def deform_penalized(k: ReferenceCurve, theta: ShapeParams, t):
    """Fitting-time variant: out-of-support arguments are penalized, not errors."""
    args = _scaled_args(theta, np.asarray(t, dtype=float))
    return sqrt(theta.u * theta.d) * k.evaluate_penalized(args) + theta.h


def residuals(k: ReferenceCurve, theta: ShapeParams, beat, time_axis):
    """Observed-minus-model residuals in the reference's centered frame."""
    t_c = np.asarray(time_axis, dtype=float) - k.center_t
    x_c = np.asarray(beat, dtype=float) - k.center_v
    return x_c - deform(k, theta, t_c)
