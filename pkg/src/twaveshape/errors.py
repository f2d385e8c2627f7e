"""Exception hierarchy for the twaveshape package."""


class TwaveError(Exception):
    """Base class for all twaveshape errors."""


# --- ingest ---

class ParseError(TwaveError):
    """Malformed input file content (carries the offending line number)."""


class EmptyRecordError(TwaveError):
    """Input file contained no samples."""


class HeaderError(TwaveError):
    """Invalid or inconsistent signal header fields."""


class UnsupportedFormatError(TwaveError):
    """Signal stored in a format other than the 212 packing."""


class TruncatedSignalError(TwaveError):
    """Signal file shorter than the header advertises (carries byte offset)."""


class AnnotationRangeError(TwaveError):
    """Annotation index outside the record."""


# --- segmentation ---

class DetectionError(TwaveError):
    """R-peak detection found nothing usable."""


class EmptyMatrixError(TwaveError):
    """No beat fits inside the requested window."""


class InsufficientDataError(TwaveError):
    """Too few beats/points for the requested operation."""


class InvalidWindowError(TwaveError):
    """Window bounds inverted or otherwise unusable."""


# --- reference / model ---

class TooFewPointsError(TwaveError):
    """Not enough knots to build a cubic spline."""


class OutOfSupportError(TwaveError):
    """Evaluation point outside the reference curve's extended support."""


class IncompatibleSupportError(TwaveError):
    """Reference curves share no common support interval."""


# --- analysis ---

class ConstraintError(TwaveError):
    """Quadratic T-wave coefficients violate a < 0 or c > 0."""


class NoCrossingError(TwaveError):
    """Deformed T-wave never returns to baseline (negative radicand)."""


class InfeasibleError(TwaveError):
    """Requested clustering is infeasible (k exceeds the number of beats)."""


class DegenerateCovarianceError(TwaveError):
    """Singular parameter covariance; outlier distances undefined."""


# --- synthgen ---

class InfeasibleSpecError(TwaveError):
    """Synthetic spec would collide T-windows with neighboring beats."""
