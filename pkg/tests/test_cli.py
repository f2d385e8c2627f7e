import csv
import json

import pytest

from twaveshape.cli import main


def _run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    """A generated record plus its truth artifacts, made through the CLI."""
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "spec.cfg"
    cfg.write_text(
        "n_beats = 24\n"
        "theta_process = two-regime\n"
        "theta_base = 1.05, 0.95, 8, 0.08\n"
        "theta_alt = 0.95, 1.05, -8, -0.08\n"
        "regime_period = 2\n"
        "regime_alt_len = 1\n"
        "noise_sigma = 0.002\n"
        "seed = 8\n"
    )
    out = root / "synth"
    assert _run("synth", "--config", cfg, "--out-dir", out) == 0
    return out


def test_synth_artifacts(synth_dir):
    for name in ("record.csv", "annotations.txt", "theta.csv", "rr.csv",
                 "summary.json"):
        assert (synth_dir / name).exists()
    summary = json.loads((synth_dir / "summary.json").read_text())
    assert summary["n_beats"] == 24
    assert summary["seed"] == 8
    peaks = [int(x) for x in (synth_dir / "annotations.txt").read_text().split()]
    assert len(peaks) == 24
    with open(synth_dir / "theta.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 24
    assert {r["label"] for r in rows} == {"0", "1"}


def test_fit_artifacts_and_convergence(synth_dir, tmp_path):
    out = tmp_path / "fit"
    rc = _run("fit", "--input", synth_dir / "record.csv", "--out-dir", out)
    assert rc == 0
    with open(out / "fits.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 24
    assert all(r["converged"] == "1" for r in rows)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["convergence_rate"] == 1.0
    assert summary["n_beats"] == 24
    assert (out / "reference.csv").exists()


def test_fit_rerun_is_byte_identical(synth_dir, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert _run("fit", "--input", synth_dir / "record.csv",
                    "--out-dir", out) == 0
    for name in ("fits.csv", "reference.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_fit_with_reference_from_file(synth_dir, tmp_path):
    base = tmp_path / "base"
    assert _run("fit", "--input", synth_dir / "record.csv",
                "--out-dir", base) == 0
    again = tmp_path / "again"
    assert _run("fit", "--input", synth_dir / "record.csv",
                "--reference", f"from-file:{base / 'reference.csv'}",
                "--out-dir", again) == 0
    assert (base / "fits.csv").read_bytes() == (again / "fits.csv").read_bytes()


def test_fit_with_annotation_file(synth_dir, tmp_path):
    out = tmp_path / "ann"
    rc = _run("fit", "--input", synth_dir / "record.csv",
              "--annotations", synth_dir / "annotations.txt",
              "--use-annotations", "--out-dir", out)
    assert rc == 0
    with open(out / "fits.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 24


def test_robustness_artifacts(synth_dir, tmp_path):
    out = tmp_path / "rob"
    rc = _run("robustness", "--input", synth_dir / "record.csv",
              "--shifts=-4,0,4", "--out-dir", out)
    assert rc == 0
    with open(out / "robustness.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["measure", "s=-4", "s=0", "s=4"]
    measures = {r[0] for r in rows[1:]}
    for p in ("u", "d", "m", "h"):
        assert f"median_rel_{p}" in measures
        assert f"stdev_rel_{p}" in measures
    assert {"median_m_ms", "stdev_m_ms"} <= measures
    by_name = {r[0]: r[1:] for r in rows[1:]}
    zero_col = rows[0].index("s=0") - 1
    assert float(by_name["median_rel_u"][zero_col]) == 0.0
    summary = json.loads((out / "robustness.json").read_text())
    assert summary["h_excluded"] == 0


def test_cluster_with_labels(synth_dir, tmp_path):
    with open(synth_dir / "theta.csv") as fh:
        labels = [r["label"] for r in csv.DictReader(fh)]
    label_file = tmp_path / "labels.txt"
    label_file.write_text("".join(f"{v}\n" for v in labels))
    out = tmp_path / "clu"
    rc = _run("cluster", "--input", synth_dir / "record.csv",
              "--features", "m,h", "--k", "2",
              "--labels", label_file, "--out-dir", out)
    assert rc == 0
    summary = json.loads((out / "cluster_summary.json").read_text())
    assert summary["match_rate"] == 1.0
    with open(out / "clusters.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 24
    assert {r["assignment"] for r in rows} == {"0", "1"}


def test_psd_artifacts(synth_dir, tmp_path):
    out = tmp_path / "psd"
    rc = _run("psd", "--input", synth_dir / "record.csv", "--out-dir", out)
    assert rc == 0
    with open(out / "psd.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["freq_hz", "power_u", "power_d", "power_m", "power_h"]
    summary = json.loads((out / "psd_summary.json").read_text())
    # alternating regimes put the dominant power at the Nyquist of the
    # beat rate: half a cycle per beat at 1 beat per second
    assert summary["peak_freq_hz"]["m"] == pytest.approx(0.5, abs=0.05)


def test_lagcorr_artifacts(synth_dir, tmp_path):
    out = tmp_path / "lag"
    rc = _run("lagcorr", "--input", synth_dir / "record.csv",
              "--max-lag", "3", "--out-dir", out)
    assert rc == 0
    with open(out / "lagcorr.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["param", "lag_0", "lag_1", "lag_2", "lag_3"]
    assert len(rows) == 5


def test_outliers_artifacts(synth_dir, tmp_path):
    out = tmp_path / "out"
    rc = _run("outliers", "--input", synth_dir / "record.csv", "--out-dir", out)
    assert rc == 0
    with open(out / "outliers.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 24
    assert set(r["flagged"] for r in rows) <= {"0", "1"}


def test_gauss_artifacts(synth_dir, tmp_path):
    out = tmp_path / "gauss"
    rc = _run("gauss", "--input", synth_dir / "record.csv", "--out-dir", out)
    assert rc == 0
    with open(out / "gauss.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 24
    for r in rows:
        assert float(r["mu1"]) <= float(r["mu2"])


def test_hyperref_artifacts(synth_dir, tmp_path):
    out = tmp_path / "hyper"
    rc = _run("hyperref", "--input", synth_dir / "record.csv",
              "--input", synth_dir / "record.csv", "--out-dir", out)
    assert rc == 0
    assert (out / "hyper_reference.csv").exists()
    summary = json.loads((out / "hyperref.json").read_text())
    assert summary["n_records"] == 2


def test_missing_input_exits_2(tmp_path):
    assert _run("fit", "--input", tmp_path / "nope.csv",
                "--out-dir", tmp_path / "o") == 2


def test_malformed_csv_exits_2(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("fs=250\n1.0\nnot-a-number\n")
    assert _run("fit", "--input", bad, "--out-dir", tmp_path / "o") == 2


def test_inverted_window_exits_3(synth_dir, tmp_path):
    rc = _run("fit", "--input", synth_dir / "record.csv",
              "--window-start-ms", "500", "--window-end-ms", "100",
              "--out-dir", tmp_path / "o")
    assert rc == 3


def test_bad_reference_policy_exits_3(synth_dir, tmp_path):
    rc = _run("fit", "--input", synth_dir / "record.csv",
              "--reference", "mystery", "--out-dir", tmp_path / "o")
    assert rc == 3
