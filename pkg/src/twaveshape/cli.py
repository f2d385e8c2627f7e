"""Command-line front end: wires the pipeline and emits CSV/JSON artifacts.

All outputs are plot-ready UTF-8 CSV with header rows plus pretty-printed
JSON summaries; given a fixed seed, reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, estimation, gaussian, ingest, reference, segmentation, synthgen
from .errors import (
    AnnotationRangeError,
    EmptyRecordError,
    HeaderError,
    ParseError,
    TruncatedSignalError,
    TwaveError,
    UnsupportedFormatError,
)

INPUT_ERRORS = (
    FileNotFoundError, ParseError, HeaderError, EmptyRecordError,
    UnsupportedFormatError, TruncatedSignalError, AnnotationRangeError,
)


def _r(x) -> str:
    return repr(float(x))


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_record(args, path) -> ingest.EcgRecord:
    if args.format == "csv":
        rec = ingest.read_csv_record(path, fs=args.fs)
    elif args.format == "wfdb212":
        rec = ingest.read_wfdb212_record(path, channel=args.channel)
    else:
        raise ValueError(f"unknown format {args.format!r}")
    if args.use_annotations:
        if not args.annotations:
            raise ValueError("--use-annotations requires --annotations <path>")
        rec = ingest.read_annotations(args.annotations, rec)
    return rec


def _reference_for(args, x, records=None):
    policy = args.reference
    if policy == "per-record":
        return reference.build_reference(x)
    if policy.startswith("from-file:"):
        return reference.read_reference_csv(policy.split(":", 1)[1])
    if policy == "hyper":
        refs = []
        for rec in records:
            peaks = segmentation.detect_r_peaks(rec)
            xi = segmentation.extract_beat_matrix(rec, peaks, x.window)
            refs.append(reference.build_reference(xi))
        return reference.build_hyper_reference(refs)
    raise ValueError(f"unknown reference policy {policy!r}")


def _pipeline(args):
    records = [_load_record(args, p) for p in args.input]
    rec = records[0]
    peaks = segmentation.detect_r_peaks(rec)
    window = (args.window_start_ms, args.window_end_ms)
    x = segmentation.extract_beat_matrix(rec, peaks, window)
    k = _reference_for(args, x, records)
    fits = estimation.fit_all(k, x, seed=args.seed)
    return rec, peaks, x, k, fits


def _write_fits_csv(path, fits) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beat", "u", "d", "m", "h", "rss", "sigma",
                    "converged", "iterations"])
        for i, f in enumerate(fits):
            p = f.params
            w.writerow([i, _r(p.u), _r(p.d), _r(p.m), _r(p.h),
                        _r(f.rss), _r(f.sigma), int(f.converged), f.iterations])


def _load_labels(args, x, peaks):
    if not args.labels:
        return None
    tokens = [ln.strip() for ln in Path(args.labels).read_text().splitlines()
              if ln.strip() and not ln.startswith("#")]
    if len(tokens) != len(peaks):
        raise ValueError(
            f"labels file has {len(tokens)} entries for {len(peaks)} peaks"
        )
    by_peak = dict(zip((int(p) for p in peaks), tokens))
    return [by_peak[int(r)] for r in x.r_indices]


def cmd_fit(args) -> int:
    _, _, x, k, fits = _pipeline(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reference.write_reference_csv(k, out / "reference.csv")
    _write_fits_csv(out / "fits.csv", fits)
    mat = analysis.params_matrix(fits)
    _write_json(out / "summary.json", {
        "n_beats": int(x.n_beats),
        "window_ms": [x.window[0], x.window[1]],
        "convergence_rate": float(np.mean([f.converged for f in fits])),
        "param_means": dict(zip(analysis.PARAM_NAMES, mat.mean(axis=0).tolist())),
        "param_stdevs": dict(zip(analysis.PARAM_NAMES,
                                 mat.std(axis=0, ddof=1).tolist())),
        "seed": args.seed,
        "reference_policy": args.reference,
    })
    return 0


def cmd_robustness(args) -> int:
    rec = _load_record(args, args.input[0])
    peaks = segmentation.detect_r_peaks(rec)
    window = (args.window_start_ms, args.window_end_ms)
    shifts = [float(s) for s in args.shifts.split(",")]
    rep = analysis.robustness_sweep(rec, peaks, window, shifts,
                                    k_policy=args.k_policy, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "robustness.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["measure"] + [f"s={s:g}" for s in rep.shifts])
        for p in analysis.PARAM_NAMES:
            w.writerow([f"median_rel_{p}"] + [_r(v) for v in rep.median_rel[p]])
            w.writerow([f"stdev_rel_{p}"] + [_r(v) for v in rep.stdev_rel[p]])
        w.writerow(["median_m_ms"] + [_r(v) for v in rep.m_abs_median])
        w.writerow(["stdev_m_ms"] + [_r(v) for v in rep.m_abs_stdev])
    _write_json(out / "robustness.json", {
        "shifts": rep.shifts,
        "n_beats": int(rep.r_indices.size),
        "h_excluded": rep.h_excluded,
        "k_policy": args.k_policy,
        "window_ms": list(window),
        "seed": args.seed,
    })
    return 0


def cmd_cluster(args) -> int:
    _, peaks, x, _, fits = _pipeline(args)
    labels = _load_labels(args, x, peaks)
    features = tuple(args.features.split(","))
    rep = analysis.kmeans_params(fits, features=features, k=args.k,
                                 labels=labels, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "clusters.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["beat", "r_index", "assignment"] + (["label"] if labels else [])
        w.writerow(header)
        for i, (r, a) in enumerate(zip(x.r_indices, rep.assignments)):
            row = [i, int(r), int(a)] + ([labels[i]] if labels else [])
            w.writerow(row)
    _write_json(out / "cluster_summary.json", {
        "k": args.k,
        "features": list(features),
        "match_rate": rep.match_rate,
        "centers": [[float(v) for v in c] for c in rep.centers],
        "inertia": rep.inertia,
        "degenerate": rep.degenerate,
        "seed": args.seed,
    })
    return 0


def cmd_psd(args) -> int:
    rec, _, x, _, fits = _pipeline(args)
    beat_times = x.r_indices / rec.fs
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    columns = {}
    freqs = None
    peaks_hz = {}
    for p in analysis.PARAM_NAMES:
        series = analysis.param_series(fits, p)
        freqs, power = analysis.psd_series(series, beat_times)
        columns[p] = power
        nz = freqs > 0
        peaks_hz[p] = float(freqs[nz][np.argmax(power[nz])])
    with open(out / "psd.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["freq_hz"] + [f"power_{p}" for p in analysis.PARAM_NAMES])
        for i, f in enumerate(freqs):
            w.writerow([_r(f)] + [_r(columns[p][i]) for p in analysis.PARAM_NAMES])
    _write_json(out / "psd_summary.json", {
        "peak_freq_hz": peaks_hz,
        "n_beats": int(x.n_beats),
        "seed": args.seed,
    })
    return 0


def cmd_lagcorr(args) -> int:
    rec, peaks, x, _, fits = _pipeline(args)
    rr = segmentation.rr_series(x.r_indices, rec.fs)
    table = analysis.lag_correlations(fits, rr, max_lag=args.max_lag)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "lagcorr.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["param"] + [f"lag_{lag}" for lag in table.lags])
        for p in analysis.PARAM_NAMES:
            w.writerow([p] + [_r(v) for v in table.r[p]])
    _write_json(out / "lagcorr.json", {
        "max_lag": args.max_lag,
        "argmax_lag": table.argmax_lag,
        "seed": args.seed,
    })
    return 0


def cmd_outliers(args) -> int:
    _, _, x, _, fits = _pipeline(args)
    flagged = analysis.outlier_beats(fits, threshold=args.threshold)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "outliers.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beat", "r_index", "flagged"])
        flag_set = set(flagged)
        for i, r in enumerate(x.r_indices):
            w.writerow([i, int(r), int(i in flag_set)])
    _write_json(out / "outliers.json", {
        "threshold": args.threshold,
        "flagged": flagged,
        "seed": args.seed,
    })
    return 0


def cmd_gauss(args) -> int:
    _, _, x, _, _ = _pipeline(args)
    pairs = gaussian.fit_gaussian_all(x.values, x.time_axis, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "gauss.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beat", "lambda1", "sigma2_1", "mu1",
                    "lambda2", "sigma2_2", "mu2", "rss"])
        for i, p in enumerate(pairs):
            w.writerow([i, _r(p.lam1), _r(p.var1), _r(p.mu1),
                        _r(p.lam2), _r(p.var2), _r(p.mu2), _r(p.rss)])
    _write_json(out / "gauss.json", {
        "n_beats": len(pairs),
        "convergence_rate": float(np.mean([p.converged for p in pairs])),
        "seed": args.seed,
    })
    return 0


def cmd_synth(args) -> int:
    spec = synthgen.read_spec_config(args.config)
    if args.seed is not None:
        spec.seed = args.seed
    result = synthgen.generate(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    synthgen.write_csv(result.record, out / "record.csv")
    (out / "annotations.txt").write_text(
        "".join(f"{int(r)}\n" for r in result.r_indices)
    )
    with open(out / "theta.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beat", "u", "d", "m", "h", "label"])
        for i, (t, lab) in enumerate(zip(result.theta, result.labels)):
            w.writerow([i, _r(t.u), _r(t.d), _r(t.m), _r(t.h), int(lab)])
    with open(out / "rr.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["interval", "rr_ms"])
        for i, v in enumerate(result.rr_ms):
            w.writerow([i, _r(v)])
    _write_json(out / "summary.json", {
        "n_beats": spec.n_beats,
        "fs": spec.fs,
        "seed": spec.seed,
        "theta_process": spec.theta_process,
        "t_apex_ms": result.t_apex_ms,
    })
    return 0


def cmd_hyperref(args) -> int:
    records = [_load_record(args, p) for p in args.input]
    window = (args.window_start_ms, args.window_end_ms)
    refs = []
    for rec in records:
        peaks = segmentation.detect_r_peaks(rec)
        x = segmentation.extract_beat_matrix(rec, peaks, window)
        refs.append(reference.build_reference(x))
    hyper = reference.build_hyper_reference(refs)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reference.write_reference_csv(hyper, out / "hyper_reference.csv")
    _write_json(out / "hyperref.json", {
        "n_records": len(records),
        "window_ms": list(window),
        "seed": args.seed,
    })
    return 0


def _add_io_args(p, multi_input=True):
    p.add_argument("--input", action="append", default=None,
                   help="input record path (repeatable)")
    p.add_argument("--format", choices=["csv", "wfdb212"], default="csv")
    p.add_argument("--fs", type=float, default=None,
                   help="sampling rate for headerless CSV input")
    p.add_argument("--channel", type=int, default=0)
    p.add_argument("--annotations", default=None, help="R-peak index file")
    p.add_argument("--use-annotations", action="store_true")
    p.add_argument("--window-start-ms", type=float, default=100.0)
    p.add_argument("--window-end-ms", type=float, default=500.0)
    p.add_argument("--reference", default="per-record",
                   help="per-record | from-file:<path> | hyper")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="twaveshape-out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twaveshape",
        description="Decompose ECG T-wave sequences into a reference curve "
                    "plus four-parameter per-beat deformations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit every beat against the reference")
    _add_io_args(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("robustness", help="window-boundary robustness sweep")
    _add_io_args(p)
    p.add_argument("--shifts", default="-12,-4,0,4,12")
    p.add_argument("--k-policy", choices=["rebuild", "reuse"], default="rebuild")
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("cluster", help="k-means clustering of fitted parameters")
    _add_io_args(p)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--features", default="d")
    p.add_argument("--labels", default=None, help="one label per peak")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("psd", help="power spectral density of parameter series")
    _add_io_args(p)
    p.set_defaults(func=cmd_psd)

    p = sub.add_parser("lagcorr", help="lagged RR correlations of parameters")
    _add_io_args(p)
    p.add_argument("--max-lag", type=int, default=3)
    p.set_defaults(func=cmd_lagcorr)

    p = sub.add_parser("outliers", help="multivariate outlier beats")
    _add_io_args(p)
    p.add_argument("--threshold", type=float, default=0.999)
    p.set_defaults(func=cmd_outliers)

    p = sub.add_parser("gauss", help="two-Gaussian baseline fits")
    _add_io_args(p)
    p.set_defaults(func=cmd_gauss)

    p = sub.add_parser("synth", help="generate a synthetic record")
    p.add_argument("--config", required=True, help="key=value spec file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default="twaveshape-out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("hyperref", help="hyper-reference over several records")
    _add_io_args(p)
    p.set_defaults(func=cmd_hyperref)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "synth" and not args.input:
        parser.error(f"{args.command} requires at least one --input")
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"twaveshape: input error: {exc}", file=sys.stderr)
        return 2
    except (TwaveError, ValueError) as exc:
        print(f"twaveshape: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
