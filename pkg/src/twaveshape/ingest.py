"""Read ECG records and beat annotations from disk.

Internal voltage unit is millivolts everywhere; ADC-to-mV conversion
happens here at ingest time.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AnnotationRangeError,
    EmptyRecordError,
    HeaderError,
    ParseError,
    TruncatedSignalError,
    UnsupportedFormatError,
)


@dataclass(frozen=True)
class EcgRecord:
    """Uniformly sampled voltage series (mV) with optional R-peak marks."""

    samples: np.ndarray          # mV
    fs: float                    # Hz
    t0: float = 0.0              # seconds
    label: str = ""
    annotations: Optional[tuple[int, ...]] = None  # R-peak sample indices

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if self.fs <= 0:
            raise ValueError(f"fs must be positive, got {self.fs}")
        if samples.size == 0:
            raise EmptyRecordError("record has no samples")
        if not np.all(np.isfinite(samples)):
            raise ValueError("record contains non-finite samples")
        if self.annotations is not None:
            ann = tuple(int(a) for a in self.annotations)
            if any(b <= a for a, b in zip(ann, ann[1:])):
                raise ValueError("annotations must be strictly increasing")
            if ann and (ann[0] < 0 or ann[-1] >= samples.size):
                raise AnnotationRangeError(
                    f"annotation outside record [0, {samples.size})"
                )
            object.__setattr__(self, "annotations", ann)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.fs


def read_csv_record(path, fs: float | None = None, label: str | None = None) -> EcgRecord:
    """Read a CSV voltage record.

    Accepted lines: an optional ``fs=<Hz>`` header, ``#`` comments, and then
    either one voltage per line or ``t,v`` pairs.  A header fs overrides
    the ``fs`` argument.
    """
    path = Path(path)
    values = []
    file_fs = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("fs="):
                try:
                    file_fs = float(line[3:])
                except ValueError:
                    raise ParseError(f"{path}: bad fs header on line {lineno}: {line!r}")
                continue
            fields = line.split(",")
            token = fields[-1] if len(fields) == 2 else fields[0]
            if len(fields) > 2:
                raise ParseError(f"{path}: too many fields on line {lineno}: {line!r}")
            try:
                values.append(float(token))
            except ValueError:
                raise ParseError(f"{path}: non-numeric value on line {lineno}: {token!r}")
    if not values:
        raise EmptyRecordError(f"{path}: no samples found")
    effective_fs = file_fs if file_fs is not None else fs
    if effective_fs is None:
        raise HeaderError(f"{path}: no fs header and no fs argument given")
    return EcgRecord(
        samples=np.asarray(values), fs=effective_fs,
        label=label if label is not None else path.stem,
    )


def unpack_212(data: bytes, n_samples: int) -> np.ndarray:
    """Decode the 212 packing: two 12-bit two's-complement samples per 3 bytes."""
    n_bytes_needed = (n_samples * 3 + 1) // 2
    if len(data) < n_bytes_needed:
        raise TruncatedSignalError(
            f"signal file truncated: need {n_bytes_needed} bytes, have {len(data)}"
            f" (missing from byte offset {len(data)})"
        )
    buf = np.frombuffer(data[:n_bytes_needed], dtype=np.uint8)
    # pad to a whole number of 3-byte groups
    n_groups = (n_samples + 1) // 2
    padded = np.zeros(n_groups * 3, dtype=np.uint8)
    padded[: buf.size] = buf[: n_groups * 3]
    b0 = padded[0::3].astype(np.int32)
    b1 = padded[1::3].astype(np.int32)
    b2 = padded[2::3].astype(np.int32)
    first = ((b1 & 0x0F) << 8) | b0
    second = ((b1 & 0xF0) << 4) | b2
    out = np.empty(n_groups * 2, dtype=np.int32)
    out[0::2] = first
    out[1::2] = second
    out = out[:n_samples]
    out[out > 2047] -= 4096  # sign-extend 12 bits
    return out


def pack_212(samples: Sequence[int]) -> bytes:
    """Encode 12-bit two's-complement samples into the 212 packing."""
    arr = np.asarray(samples, dtype=np.int32)
    if arr.size and (arr.min() < -2048 or arr.max() > 2047):
        raise ValueError("sample out of 12-bit range")
    vals = np.where(arr < 0, arr + 4096, arr)
    if vals.size % 2:
        vals = np.append(vals, 0)
    first = vals[0::2]
    second = vals[1::2]
    out = np.empty(first.size * 3, dtype=np.uint8)
    out[0::3] = first & 0xFF
    out[1::3] = ((first >> 8) & 0x0F) | (((second >> 8) & 0x0F) << 4)
    out[2::3] = second & 0xFF
    n_bytes = (arr.size * 3 + 1) // 2
    return out.tobytes()[:n_bytes] if arr.size % 2 else out.tobytes()


def read_wfdb212_record(header_path, channel: int = 0) -> EcgRecord:
    """Read a WFDB-style record stored in format 212.

    The header's first line is ``name nsig fs nsamples``; each following
    per-signal line carries ``filename format gain baseline``.
    """
    header_path = Path(header_path)
    lines = [
        ln.strip() for ln in header_path.read_text().splitlines()
        if ln.strip() and not ln.strip().startswith("#")
    ]
    if not lines:
        raise HeaderError(f"{header_path}: empty header")
    head = lines[0].split()
    if len(head) < 4:
        raise HeaderError(f"{header_path}: header line needs 'name nsig fs nsamples'")
    name = head[0]
    try:
        nsig, fs, nsamples = int(head[1]), float(head[2]), int(head[3])
    except ValueError:
        raise HeaderError(f"{header_path}: non-numeric header fields: {lines[0]!r}")
    if nsig < 1 or nsamples < 1:
        raise HeaderError(f"{header_path}: nsig and nsamples must be positive")
    if not 0 <= channel < nsig:
        raise HeaderError(f"{header_path}: channel {channel} not in [0, {nsig})")
    if len(lines) < 1 + nsig:
        raise HeaderError(f"{header_path}: expected {nsig} signal lines")
    sig_lines = [ln.split() for ln in lines[1 : 1 + nsig]]
    for fields in sig_lines:
        if len(fields) < 4:
            raise HeaderError(
                f"{header_path}: signal line needs 'filename format gain baseline'"
            )
        if fields[1] != "212":
            raise UnsupportedFormatError(
                f"{header_path}: unsupported signal format {fields[1]} (only 212)"
            )
    fields = sig_lines[channel]
    sig_file = header_path.parent / sig_lines[0][0]
    try:
        gain = float(fields[2])
        baseline = float(fields[3])
    except ValueError:
        raise HeaderError(f"{header_path}: non-numeric gain/baseline: {fields!r}")
    if gain == 0:
        raise HeaderError(f"{header_path}: gain must be nonzero")
    raw = unpack_212(sig_file.read_bytes(), nsig * nsamples)
    adc = raw[channel::nsig]
    return EcgRecord(samples=(adc - baseline) / gain, fs=fs, label=name)


def read_annotations(path, record: EcgRecord) -> EcgRecord:
    """Attach R-peak sample indices (one integer per line) to a record."""
    path = Path(path)
    indices = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                idx = int(line)
            except ValueError:
                raise ParseError(f"{path}: non-integer index on line {lineno}: {line!r}")
            if not 0 <= idx < record.samples.size:
                raise AnnotationRangeError(
                    f"{path}: index {idx} outside record [0, {record.samples.size})"
                )
            indices.append(idx)
    ann = tuple(sorted(set(indices)))
    return replace(record, annotations=ann)
