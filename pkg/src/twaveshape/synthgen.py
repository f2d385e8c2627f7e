"""Synthetic ECG generator: the ground-truth oracle for the whole pipeline.

Records carry sharp triangular R spikes (to exercise detection) and
T-waves produced by deforming a known reference shape with a scheduled
per-beat parameter process, plus optional white Gaussian noise.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InfeasibleSpecError, OutOfSupportError
from .ingest import EcgRecord
from .model import ShapeParams, deform
from .reference import ReferenceCurve, curve_from_samples, read_reference_csv


@dataclass
class SynthSpec:
    """Everything needed to reproduce one synthetic record."""

    shape: str = "raised-cosine"        # raised-cosine | parabola | spline-from-file
    shape_a: float = -0.00002           # parabola coefficients (mV/ms^2, ms, mV)
    shape_b: float = 0.0
    shape_c: float = 0.25
    shape_file: str = ""
    amplitude: float = 0.3              # raised-cosine peak height (mV)
    halfwidth_ms: float = 140.0         # raised-cosine half-support

    theta_process: str = "constant"     # constant | two-regime | sinusoidal | rr-lag-coupled
    theta_base: tuple = (1.0, 1.0, 0.0, 0.0)
    theta_alt: tuple = (1.15, 0.7, 0.0, -0.05)
    regime_period: int = 8              # two-regime: cycle length in beats
    regime_alt_len: int = 3             # two-regime: alt beats per cycle
    theta_freq_hz: float = 0.14         # sinusoidal process frequency
    theta_amp: tuple = (0.1, 0.1, 4.0, 0.02)
    lag: int = 2                        # rr-lag-coupled: beats of delay
    gain: float = 1.0                   # rr-lag-coupled: coupling strength

    rr_process: str = "constant"        # constant | sinusoidal
    bpm: float = 60.0
    rr_amp: float = 0.0                 # relative sinusoidal RR modulation
    rr_freq_hz: float = 0.1
    rr_jitter_ms: float = 0.0           # white jitter on RR

    noise_sigma: float = 0.0            # mV
    n_beats: int = 60
    fs: float = 250.0
    seed: int = 0

    t_apex_ms: float = 300.0            # nominal T apex offset after R
    embed_halfwidth_ms: float = 240.0   # half-width of the written T region
    spike_amplitude: float = 1.5        # mV
    spike_halfwidth_ms: float = 12.0

    def __post_init__(self):
        if self.n_beats < 1:
            raise ValueError("n_beats must be >= 1")
        if self.fs <= 0:
            raise ValueError("fs must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


@dataclass
class SynthResult:
    """Generated record plus the ground truth behind it."""

    record: EcgRecord
    theta: list                  # true ShapeParams per beat
    rr_ms: np.ndarray            # realized intervals between successive R peaks
    r_indices: np.ndarray        # true R apex sample indices
    labels: np.ndarray           # regime label per beat (0 unless two-regime)
    t_apex_ms: float
    reference: ReferenceCurve    # the true shape K


def make_shape_curve(spec: SynthSpec) -> ReferenceCurve:
    """Build the true reference curve for the requested shape."""
    step = 1000.0 / spec.fs
    if spec.shape == "raised-cosine":
        w = spec.halfwidth_ms
        n = int(np.ceil(1.1 * w / step))
        t = step * np.arange(-n, n + 1)
        v = np.where(np.abs(t) <= w,
                     0.5 * spec.amplitude * (1 + np.cos(np.pi * t / w)), 0.0)
        return curve_from_samples(t, v)
    if spec.shape == "parabola":
        a, b, c = spec.shape_a, spec.shape_b, spec.shape_c
        if a >= 0 or c <= 0:
            raise ValueError("parabola shape needs a < 0 and c > 0")
        r = np.sqrt(-c / a)
        n = int(np.ceil(1.2 * r / step))
        t = b + step * np.arange(-n, n + 1)
        v = a * (t - b) ** 2 + c
        return curve_from_samples(t, v)
    if spec.shape == "spline-from-file":
        return read_reference_csv(spec.shape_file)
    raise ValueError(f"unknown shape {spec.shape!r}")


def _rr_intervals(spec: SynthSpec, rng) -> np.ndarray:
    n = spec.n_beats - 1
    base = 60000.0 / spec.bpm
    t = np.cumsum(np.full(n, base)) / 1000.0 if n else np.array([])
    rr = np.full(n, base)
    if spec.rr_process == "sinusoidal":
        rr = base * (1.0 + spec.rr_amp * np.sin(2 * np.pi * spec.rr_freq_hz * t))
    elif spec.rr_process != "constant":
        raise ValueError(f"unknown rr_process {spec.rr_process!r}")
    if spec.rr_jitter_ms > 0:
        rr = rr + rng.normal(0.0, spec.rr_jitter_ms, size=n)
    return rr


def _theta_schedule(spec: SynthSpec, rr: np.ndarray, beat_times_s: np.ndarray,
                    rng) -> tuple[list[ShapeParams], np.ndarray]:
    base = np.asarray(spec.theta_base, dtype=float)
    n = spec.n_beats
    labels = np.zeros(n, dtype=int)
    thetas = np.tile(base, (n, 1))
    if spec.theta_process == "constant":
        pass
    elif spec.theta_process == "two-regime":
        alt = np.asarray(spec.theta_alt, dtype=float)
        for i in range(n):
            if i % spec.regime_period < spec.regime_alt_len:
                thetas[i] = alt
                labels[i] = 1
    elif spec.theta_process == "sinusoidal":
        amp = np.asarray(spec.theta_amp, dtype=float)
        mod = np.sin(2 * np.pi * spec.theta_freq_hz * beat_times_s)
        thetas = base[None, :] + amp[None, :] * mod[:, None]
    elif spec.theta_process == "rr-lag-coupled":
        # rr_at_beat[i] is the interval ending at beat i
        rr_at_beat = np.full(n, np.nan)
        rr_at_beat[1:] = rr
        mean, std = np.nanmean(rr_at_beat), np.nanstd(rr_at_beat)
        std = std if std > 0 else 1.0
        for i in range(n):
            j = i - spec.lag
            z = 0.0
            if j >= 1 and np.isfinite(rr_at_beat[j]):
                z = (rr_at_beat[j] - mean) / std
            thetas[i, 0] = base[0] * (1.0 - 0.1 * spec.gain * z)  # u: inverse
            thetas[i, 2] = base[2] + 5.0 * spec.gain * z          # m: direct
    else:
        raise ValueError(f"unknown theta_process {spec.theta_process!r}")
    return [ShapeParams(*row) for row in thetas], labels


def generate(spec: SynthSpec) -> SynthResult:
    """Render the record described by a SynthSpec; fully seeded."""
    rng = np.random.default_rng(spec.seed)
    fs = spec.fs
    step = 1000.0 / fs
    k_true = make_shape_curve(spec)

    rr = _rr_intervals(spec, rng)
    min_rr = (spec.t_apex_ms + spec.embed_halfwidth_ms + spec.spike_halfwidth_ms
              + 2 * step)
    if spec.t_apex_ms - spec.embed_halfwidth_ms <= spec.spike_halfwidth_ms:
        raise InfeasibleSpecError("T region would overlap its own R spike")
    if rr.size and rr.min() <= min_rr:
        raise InfeasibleSpecError(
            f"RR {rr.min():.1f} ms too short for the T window (need > {min_rr:.1f})"
        )

    r0 = int(round(0.6 * fs))
    r_indices = r0 + np.concatenate(
        [[0], np.cumsum(np.round(rr * fs / 1000.0).astype(int))]
    ) if rr.size else np.array([r0])
    rr_real = np.diff(r_indices) * 1000.0 / fs
    beat_times_s = r_indices / fs
    thetas, labels = _theta_schedule(spec, rr_real, beat_times_s, rng)

    n_samples = int(r_indices[-1] + round((spec.t_apex_ms
                    + spec.embed_halfwidth_ms + 500.0) * fs / 1000.0))
    samples = np.zeros(n_samples)

    spike_hw = int(round(spec.spike_halfwidth_ms * fs / 1000.0))
    spike_off = np.arange(-spike_hw, spike_hw + 1)
    spike = spec.spike_amplitude * (1.0 - np.abs(spike_off) / spike_hw)

    embed_n = int(round(spec.embed_halfwidth_ms * fs / 1000.0))
    embed_off = np.arange(-embed_n, embed_n + 1)
    embed_t = embed_off * step  # ms relative to the nominal T apex

    for r, theta in zip(r_indices, thetas):
        samples[r + spike_off] += spike
        apex_idx = r + int(round(spec.t_apex_ms * fs / 1000.0))
        try:
            # embed in the raw (uncentered) frame so the record reads like a
            # real observation; fitting subtracts center_v again
            wave = deform(k_true, theta, embed_t) + k_true.center_v
        except OutOfSupportError as exc:
            raise InfeasibleSpecError(
                f"theta {theta} needs reference support beyond what the shape has"
            ) from exc
        samples[apex_idx + embed_off] += wave

    if spec.noise_sigma > 0:
        samples += rng.normal(0.0, spec.noise_sigma, size=n_samples)

    record = EcgRecord(samples=samples, fs=fs, label=f"synth-{spec.seed}")
    return SynthResult(
        record=record, theta=thetas, rr_ms=rr_real,
        r_indices=np.asarray(r_indices, dtype=int), labels=labels,
        t_apex_ms=spec.t_apex_ms, reference=k_true,
    )


def write_csv(record: EcgRecord, path) -> None:
    """Write a record in the CSV interchange format (exact round-trip)."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(f"# label={record.label}\n")
        fh.write(f"fs={record.fs!r}\n")
        for v in record.samples:
            fh.write(f"{float(v)!r}\n")


_TUPLE_FIELDS = {"theta_base", "theta_alt", "theta_amp"}


def read_spec_config(path) -> SynthSpec:
    """Parse a key=value config file into a SynthSpec."""
    fields = {f.name: f for f in dataclasses.fields(SynthSpec)}
    kwargs = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if not sep or key not in fields:
                raise ValueError(f"{path}: bad config line {lineno}: {raw!r}")
            if key in _TUPLE_FIELDS:
                kwargs[key] = tuple(float(x) for x in val.split(","))
            elif fields[key].type in ("int", int):
                kwargs[key] = int(val)
            elif fields[key].type in ("float", float):
                kwargs[key] = float(val)
            else:
                kwargs[key] = val
    return SynthSpec(**kwargs)
