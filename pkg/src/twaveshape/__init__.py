"""twaveshape: decompose ECG T-wave sequences into a common reference curve
plus a four-parameter deformation (uphill slope, downhill slope, horizontal
location, vertical shift) per beat, with downstream beat analyses."""

from .ingest import EcgRecord, read_annotations, read_csv_record, read_wfdb212_record
from .segmentation import (
    BeatMatrix,
    RrSeries,
    detect_r_peaks,
    extract_beat_matrix,
    rr_series,
)
from .reference import (
    ReferenceCurve,
    build_hyper_reference,
    build_reference,
    curve_from_samples,
    read_reference_csv,
    write_reference_csv,
)
from .model import FitResult, ShapeParams, deform, residuals
from .estimation import fit_all, fit_beat, fit_beat_sim
from .analysis import (
    ClusterReport,
    LagCorrelationTable,
    QuadraticT,
    RobustnessReport,
    kmeans_features,
    kmeans_params,
    lag_correlations,
    outlier_beats,
    param_series,
    params_matrix,
    psd_series,
    qt_deformed,
    qt_deformed_uphill,
    qt_quadratic,
    robustness_sweep,
)
from .gaussian import GaussianPair, classify_by_mu, fit_gaussian_all, fit_gaussian_pair
from .synthgen import SynthResult, SynthSpec, generate, read_spec_config, write_csv

__version__ = "0.1.0"

__all__ = [
    "EcgRecord", "read_csv_record", "read_wfdb212_record", "read_annotations",
    "BeatMatrix", "RrSeries", "detect_r_peaks", "extract_beat_matrix", "rr_series",
    "ReferenceCurve", "build_reference", "build_hyper_reference",
    "curve_from_samples", "read_reference_csv", "write_reference_csv",
    "ShapeParams", "FitResult", "deform", "residuals",
    "fit_beat", "fit_beat_sim", "fit_all",
    "QuadraticT", "RobustnessReport", "ClusterReport", "LagCorrelationTable",
    "robustness_sweep", "qt_quadratic", "qt_deformed", "qt_deformed_uphill",
    "kmeans_features", "kmeans_params", "params_matrix", "param_series",
    "psd_series", "lag_correlations", "outlier_beats",
    "GaussianPair", "fit_gaussian_pair", "fit_gaussian_all", "classify_by_mu",
    "SynthSpec", "SynthResult", "generate", "write_csv", "read_spec_config",
    "__version__",
]
