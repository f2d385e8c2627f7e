"""Per-beat nonlinear least-squares estimation of the deformation parameters.

The search runs a Nelder-Mead simplex over (log u, log d, m, h) with the
coordinates rescaled so one simplex unit means roughly the same thing for
every parameter: log-slopes as-is, m in units of 10 ms, h in units of
0.1 mV.  Positivity of u and d comes free from the log reparametrization.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .model import FitResult, ShapeParams, deform_penalized
from .reference import ReferenceCurve
from .segmentation import BeatMatrix

M_SCALE = 10.0     # ms per simplex unit
H_SCALE = 0.1      # mV per simplex unit
XATOL = 1e-6       # simplex diameter in scaled units
FATOL = 1e-8
MAX_ITER = 2000
MAX_RESTARTS = 3


def _theta_from_z(z) -> ShapeParams:
    return ShapeParams(
        u=math.exp(z[0]), d=math.exp(z[1]),
        m=z[2] * M_SCALE, h=z[3] * H_SCALE,
    )


def _z_from_theta(theta: ShapeParams):
    return np.array([
        math.log(theta.u), math.log(theta.d),
        theta.m / M_SCALE, theta.h / H_SCALE,
    ])


def _default_init(k: ReferenceCurve, x_c, t_c) -> ShapeParams:
    # apex matching puts the breakpoint near truth; h soaks up the offset
    m0 = float(t_c[int(np.argmax(x_c))])
    base = deform_penalized(k, ShapeParams(1.0, 1.0, m0, 0.0), t_c)
    h0 = float(np.mean(x_c) - np.mean(base))
    return ShapeParams(1.0, 1.0, m0, h0)


def _run_simplex(objective, z0, n_dim):
    res = minimize(
        objective, z0, method="Nelder-Mead",
        options={"xatol": XATOL, "fatol": FATOL,
                 "maxiter": MAX_ITER, "maxfev": 2 * MAX_ITER},
    )
    return res


def fit_beat(
    k: ReferenceCurve,
    beat,
    time_axis,
    init: Optional[ShapeParams] = None,
    seed: int = 0,
) -> FitResult:
    """Least-squares fit of one beat against the reference curve.

    Non-convergence never raises: after up to 3 jittered restarts the best
    point found is returned with converged=False.
    """
    beat = np.asarray(beat, dtype=float)
    t_axis = np.asarray(time_axis, dtype=float)
    if beat.size != t_axis.size or beat.size < 8:
        raise ValueError("beat and time axis must match and have >= 8 points")
    t_c = t_axis - k.center_t
    x_c = beat - k.center_v

    def objective(z):
        theta = _theta_from_z(z)
        r = x_c - deform_penalized(k, theta, t_c)
        return float(np.dot(r, r))

    theta0 = init if init is not None else _default_init(k, x_c, t_c)
    z0 = _z_from_theta(theta0)

    rng = np.random.default_rng(seed)
    best = None
    total_iters = 0
    for attempt in range(1 + MAX_RESTARTS):
        res = _run_simplex(objective, z0, 4)
        total_iters += res.nit
        if best is None or res.fun < best.fun:
            best = res
        if best.success:
            break
        # jitter: +-20% on u and d, +-20 ms on m, h re-derived from the start
        z0 = _z_from_theta(theta0) + np.array([
            rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
            rng.uniform(-20.0, 20.0) / M_SCALE, 0.0,
        ])

    params = _theta_from_z(best.x)
    rss = float(best.fun)
    return FitResult(
        params=params, rss=rss, sigma=math.sqrt(rss / beat.size),
        converged=bool(best.success), iterations=int(total_iters),
    )


def fit_beat_sim(k: ReferenceCurve, beat, time_axis, seed: int = 0) -> FitResult:
    """Constrained 3-parameter shape-invariant fit with u = d = w."""
    beat = np.asarray(beat, dtype=float)
    t_axis = np.asarray(time_axis, dtype=float)
    if beat.size != t_axis.size or beat.size < 8:
        raise ValueError("beat and time axis must match and have >= 8 points")
    t_c = t_axis - k.center_t
    x_c = beat - k.center_v

    def objective(z):
        w = math.exp(z[0])
        theta = ShapeParams(w, w, z[1] * M_SCALE, z[2] * H_SCALE)
        r = x_c - deform_penalized(k, theta, t_c)
        return float(np.dot(r, r))

    theta0 = _default_init(k, x_c, t_c)
    z0 = np.array([0.0, theta0.m / M_SCALE, theta0.h / H_SCALE])

    rng = np.random.default_rng(seed)
    best = None
    total_iters = 0
    for attempt in range(1 + MAX_RESTARTS):
        res = _run_simplex(objective, z0, 3)
        total_iters += res.nit
        if best is None or res.fun < best.fun:
            best = res
        if best.success:
            break
        z0 = np.array([rng.uniform(-0.2, 0.2),
                       (theta0.m + rng.uniform(-20.0, 20.0)) / M_SCALE,
                       theta0.h / H_SCALE])

    w = math.exp(best.x[0])
    params = ShapeParams(w, w, best.x[1] * M_SCALE, best.x[2] * H_SCALE)
    rss = float(best.fun)
    return FitResult(
        params=params, rss=rss, sigma=math.sqrt(rss / beat.size),
        converged=bool(best.success), iterations=int(total_iters),
    )


def fit_all(
    k: ReferenceCurve,
    x: BeatMatrix,
    warm_start: bool = True,
    seed: int = 0,
) -> list[FitResult]:
    """Fit every beat of a matrix, optionally warm-starting from the
    previous beat's converged parameters."""
    results: list[FitResult] = []
    prev: Optional[ShapeParams] = None
    for i in range(x.n_beats):
        init = prev if warm_start else None
        res = fit_beat(k, x.values[i], x.time_axis, init=init, seed=seed)
        results.append(res)
        prev = res.params if (warm_start and res.converged) else None
    return results
