"""Exception hierarchy shared across the package.

DataError subclasses map to CLI exit code 2, NumericError subclasses to 3.
"""


class DataError(Exception):
    """Bad or inconsistent input data (files, rasters, manifests, annotations)."""


class DecodeError(DataError):
    """A raster file could not be read or has an unsupported format."""


class DimensionError(DataError):
    """Paired rasters disagree in size."""


class ManifestError(DataError):
    """A dataset manifest is malformed or references missing files."""


class AnnotationError(DataError):
    """Scribbles are unusable (e.g. a class has no labeled pixels)."""


class NumericError(Exception):
    """Numerical failure in the solver pipeline."""


class DegenerateDataError(NumericError):
    """Input collapses to a point (zero variance); no basis can be extracted."""
