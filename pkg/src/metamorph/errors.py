"""Exceptions raised on malformed or unusable input data."""


class DataError(Exception):
    """Input data cannot be parsed or does not satisfy a pipeline precondition."""


class ParseError(DataError):
    """A coordinate or alignment file is malformed."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class EnsembleMismatchError(DataError):
    """Structures assembled into one ensemble do not share the same length."""


class SingularStructureError(DataError):
    """Coordinates are degenerate (fewer than 3 points or all collinear)."""


class AllFilteredError(DataError):
    """Every ensemble member fell below the confidence threshold."""


class TrainingDataError(DataError):
    """Training data cannot support the requested model (e.g. one class only)."""
