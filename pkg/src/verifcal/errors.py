"""Exception hierarchy.

Every error raised on purpose by the package derives from ``VerifcalError``
so callers (and the CLI) can map error families to exit codes.
"""


class VerifcalError(Exception):
    """Base class for all package errors."""


class DataError(VerifcalError):
    """Problems with input data."""


class ParseError(DataError):
    """A file could not be parsed. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RangeError(DataError):
    """A value lies outside its permitted domain."""


class DimensionError(DataError):
    """Embedding vectors are of unequal or zero dimension, or have zero norm."""


class CalibrationError(VerifcalError):
    """A calibrator cannot be fitted or applied."""


class SingleClassDataset(CalibrationError):
    """The dataset holds only positive or only negative pairs."""


class DegenerateThreshold(CalibrationError):
    """A (calibrated) threshold landed outside the open interval (-1, 1)."""


class TooFewPerClass(CalibrationError):
    """A class has fewer members than the requested number of folds."""


class VersionMismatch(VerifcalError):
    """A model file has an unknown version or calibrator kind."""
