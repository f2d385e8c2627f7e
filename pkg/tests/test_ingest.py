import numpy as np
import pytest

import twaveshape as tw
from twaveshape.errors import (
    AnnotationRangeError,
    EmptyRecordError,
    HeaderError,
    ParseError,
    TruncatedSignalError,
    UnsupportedFormatError,
)
from twaveshape.ingest import pack_212, unpack_212


def test_read_csv_basic(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("0.1\n0.2\n0.1\n")
    rec = tw.read_csv_record(p, fs=250)
    assert rec.fs == 250
    np.testing.assert_array_equal(rec.samples, [0.1, 0.2, 0.1])


def test_read_csv_pairs_and_header_and_comments(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("# a comment\nfs=500\n0.0,0.1\n0.002,0.2\n")
    rec = tw.read_csv_record(p)
    assert rec.fs == 500
    np.testing.assert_array_equal(rec.samples, [0.1, 0.2])


def test_read_csv_header_overrides_argument(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("fs=1000\n0.1\n0.2\n")
    assert tw.read_csv_record(p, fs=250).fs == 1000


def test_read_csv_parse_error_names_line(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("0.1\n" * 6 + "oops\n0.3\n")
    with pytest.raises(ParseError, match="line 7"):
        tw.read_csv_record(p, fs=250)


def test_read_csv_empty_file(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("# nothing here\n")
    with pytest.raises(EmptyRecordError):
        tw.read_csv_record(p, fs=250)


def test_read_csv_missing_fs(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("0.1\n")
    with pytest.raises(HeaderError):
        tw.read_csv_record(p)


def test_csv_round_trip_exact(tmp_path):
    rng = np.random.default_rng(7)
    rec = tw.EcgRecord(samples=rng.normal(size=500), fs=250.0, label="rt")
    p = tmp_path / "rt.csv"
    tw.write_csv(rec, p)
    back = tw.read_csv_record(p)
    assert back.fs == rec.fs
    np.testing.assert_array_equal(back.samples, rec.samples)


# --- 212 codec ---

def test_unpack_212_worked_example():
    # bytes 0x30 0x01 0x14: first sample 0x130 = 304, second 0x014 = 20
    vals = unpack_212(bytes([0x30, 0x01, 0x14]), 2)
    np.testing.assert_array_equal(vals, [304, 20])


def test_212_round_trip_all_12bit_values():
    vals = np.arange(-2048, 2048)
    np.testing.assert_array_equal(unpack_212(pack_212(vals), vals.size), vals)


def test_212_decoder_against_nibble_arithmetic():
    # independent oracle: per-group nibble arithmetic on random 3-byte groups
    rng = np.random.default_rng(42)
    groups = rng.integers(0, 256, size=(10_000, 3), dtype=np.uint8)
    decoded = unpack_212(groups.tobytes(), 20_000)
    for g, (b0, b1, b2) in enumerate(groups):
        s1 = int(b0) + 256 * (int(b1) % 16)
        s2 = int(b2) + 256 * (int(b1) // 16)
        if s1 >= 2048:
            s1 -= 4096
        if s2 >= 2048:
            s2 -= 4096
        assert decoded[2 * g] == s1 and decoded[2 * g + 1] == s2


def _write_wfdb(tmp_path, adc, gain=200.0, baseline=0.0, fs=250, fmt="212",
                nsig=1, truncate=0):
    name = "rec"
    dat = tmp_path / f"{name}.dat"
    hea = tmp_path / f"{name}.hea"
    n = len(adc) // nsig
    data = pack_212(adc)
    if truncate:
        data = data[:-truncate]
    dat.write_bytes(data)
    lines = [f"{name} {nsig} {fs} {n}"]
    for _ in range(nsig):
        lines.append(f"{name}.dat {fmt} {gain} {baseline}")
    hea.write_text("\n".join(lines) + "\n")
    return hea


def test_read_wfdb212_gain_conversion(tmp_path):
    hea = _write_wfdb(tmp_path, [304, 20, -100, 0], gain=200.0, baseline=10.0)
    rec = tw.read_wfdb212_record(hea)
    np.testing.assert_allclose(
        rec.samples, (np.array([304, 20, -100, 0]) - 10.0) / 200.0
    )
    assert rec.fs == 250


def test_read_wfdb212_dual_channel(tmp_path):
    # interleaved: ch0 = [1, 3], ch1 = [2, 4]
    hea = _write_wfdb(tmp_path, [1, 2, 3, 4], gain=1.0, nsig=2)
    ch0 = tw.read_wfdb212_record(hea, channel=0)
    ch1 = tw.read_wfdb212_record(hea, channel=1)
    np.testing.assert_array_equal(ch0.samples, [1, 3])
    np.testing.assert_array_equal(ch1.samples, [2, 4])


def test_read_wfdb212_unsupported_format(tmp_path):
    hea = _write_wfdb(tmp_path, [1, 2], fmt="16")
    with pytest.raises(UnsupportedFormatError):
        tw.read_wfdb212_record(hea)


def test_read_wfdb212_zero_gain(tmp_path):
    hea = _write_wfdb(tmp_path, [1, 2], gain=0.0)
    with pytest.raises(HeaderError):
        tw.read_wfdb212_record(hea)


def test_read_wfdb212_truncated(tmp_path):
    hea = _write_wfdb(tmp_path, list(range(100)), truncate=10)
    with pytest.raises(TruncatedSignalError, match="byte offset"):
        tw.read_wfdb212_record(hea)


# --- annotations ---

def _record(n=1000):
    return tw.EcgRecord(samples=np.zeros(n) + 0.1, fs=250.0)


def test_read_annotations_attach(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("250\n500\n750\n")
    rec = tw.read_annotations(p, _record())
    assert rec.annotations == (250, 500, 750)


def test_read_annotations_out_of_range(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("1200\n")
    with pytest.raises(AnnotationRangeError, match="1200"):
        tw.read_annotations(p, _record())


def test_read_annotations_dedup_and_sort(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("500\n250\n500\n")
    rec = tw.read_annotations(p, _record())
    assert rec.annotations == (250, 500)


def test_record_invariants():
    with pytest.raises(ValueError):
        tw.EcgRecord(samples=np.array([1.0, np.nan]), fs=250.0)
    with pytest.raises(ValueError):
        tw.EcgRecord(samples=np.ones(10), fs=-1.0)
    with pytest.raises(ValueError):
        tw.EcgRecord(samples=np.ones(10), fs=250.0, annotations=(5, 5))
