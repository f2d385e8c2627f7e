import numpy as np
import pytest

import twaveshape as tw
from twaveshape.errors import (
    DetectionError,
    EmptyMatrixError,
    InsufficientDataError,
    InvalidWindowError,
)


def _spike_train(bpm=60, seconds=60, fs=250.0):
    """Gaussian R spikes at an exact rate; returns (record, true peak indices)."""
    n = int(seconds * fs)
    t = np.arange(n)
    period = int(round(60.0 / bpm * fs))
    peaks = np.arange(period, n - period, period)
    x = np.zeros(n)
    for p in peaks:
        x += 1.2 * np.exp(-((t - p) ** 2) / (2 * 3.0**2))
    return tw.EcgRecord(samples=x, fs=fs), peaks


def test_detect_60bpm_train():
    rec, truth = _spike_train()
    det = tw.detect_r_peaks(rec)
    assert det.size == truth.size
    diffs = np.diff(det)
    assert np.all(np.abs(diffs - 250) <= 1)
    assert np.all(np.abs(det - truth) <= 1)


def test_detect_annotations_take_precedence():
    rec, _ = _spike_train()
    ann = (100, 600, 1100)
    rec2 = tw.EcgRecord(samples=rec.samples, fs=rec.fs, annotations=ann)
    np.testing.assert_array_equal(tw.detect_r_peaks(rec2), ann)


def test_detect_flat_signal_fails():
    rec = tw.EcgRecord(samples=np.zeros(2000) + 0.0, fs=250.0)
    with pytest.raises(DetectionError):
        tw.detect_r_peaks(rec)


def test_detect_short_record_fails():
    rec = tw.EcgRecord(samples=np.ones(100), fs=250.0)
    with pytest.raises(DetectionError):
        tw.detect_r_peaks(rec)


def test_detect_shift_invariance():
    rec, _ = _spike_train(seconds=30)
    det = tw.detect_r_peaks(rec)
    k = 17
    shifted = tw.EcgRecord(samples=np.roll(rec.samples, k), fs=rec.fs)
    det_shifted = tw.detect_r_peaks(shifted)
    # interior peaks move by exactly k samples
    np.testing.assert_array_equal(det_shifted, det + k)


def test_extract_matrix_shape():
    rec = tw.EcgRecord(samples=np.random.default_rng(0).normal(size=1000),
                       fs=250.0)
    x = tw.extract_beat_matrix(rec, [250, 500, 750], (100.0, 400.0))
    assert x.values.shape == (3, 76)
    assert x.time_axis[0] == 100.0
    assert x.time_axis[-1] == pytest.approx(400.0)


def test_extract_drops_edge_beats():
    rec = tw.EcgRecord(samples=np.arange(1000.0), fs=250.0)
    x = tw.extract_beat_matrix(rec, [10, 500, 750], (-100.0, 100.0))
    assert x.n_beats == 2
    np.testing.assert_array_equal(x.r_indices, [500, 750])


def test_extract_empty_matrix_error():
    rec = tw.EcgRecord(samples=np.ones(100), fs=250.0)
    with pytest.raises(EmptyMatrixError):
        tw.extract_beat_matrix(rec, [50], (100.0, 500.0))


def test_extract_invalid_window():
    rec = tw.EcgRecord(samples=np.ones(100), fs=250.0)
    with pytest.raises(InvalidWindowError):
        tw.extract_beat_matrix(rec, [50], (400.0, 100.0))


def test_extract_window_identity_invariant():
    rng = np.random.default_rng(3)
    rec = tw.EcgRecord(samples=rng.normal(size=2000), fs=250.0)
    x = tw.extract_beat_matrix(rec, [400, 900], (100.0, 500.0))
    for i, r in enumerate(x.r_indices):
        idx = r + np.round(x.time_axis * rec.fs / 1000.0).astype(int)
        np.testing.assert_array_equal(x.values[i], rec.samples[idx])


def test_extract_matches_generator_windows():
    res = tw.generate(tw.SynthSpec(n_beats=8, noise_sigma=0.0))
    x = tw.extract_beat_matrix(res.record, res.r_indices, (100.0, 500.0))
    k = res.reference
    for i, theta in enumerate(res.theta):
        expected = tw.deform(k, theta, x.time_axis - res.t_apex_ms) + k.center_v
        np.testing.assert_allclose(x.values[i], expected, atol=1e-12)


def test_rr_series_basic():
    rr = tw.rr_series([0, 250, 500], 250.0)
    np.testing.assert_allclose(rr.rr, [1000.0, 1000.0])
    rr = tw.rr_series([0, 200, 500], 250.0)
    np.testing.assert_allclose(rr.rr, [800.0, 1200.0])


def test_rr_series_insufficient():
    with pytest.raises(InsufficientDataError):
        tw.rr_series([100], 250.0)


def test_rr_series_from_detected_60bpm():
    rec, _ = _spike_train()
    det = tw.detect_r_peaks(rec)
    rr = tw.rr_series(det, rec.fs)
    assert np.all((rr.rr >= 996) & (rr.rr <= 1004))
