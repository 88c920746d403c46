from typing import Any, Dict, List, Optional, Sequence


class RcGpsError(Exception):
    """Base class for all errors raised by rc_gps. ``exit_code`` is used by the command line interface."""

    exit_code = 1


class DataError(RcGpsError, ValueError):
    """The input data (or configuration) cannot be used as given."""

    exit_code = 2


class ParseError(DataError):
    """A tabular file could not be parsed. ``row`` is 1-based and counts the header row."""

    def __init__(self, message: str, path: Optional[str] = None, row: Optional[int] = None, column: Any = None):
        location = []
        if path is not None:
            location.append(str(path))
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column!r}")
        super().__init__(f"{', '.join(location)}: {message}" if location else message)
        self.path = path
        self.row = row
        self.column = column


class SchemaError(DataError):
    """A required column is missing or has the wrong shape."""

    def __init__(self, message: str, column: Optional[str] = None):
        super().__init__(message)
        self.column = column


class InvalidDataError(DataError):
    pass


class InvalidSpecError(DataError):
    pass


class DegenerateWeightsError(DataError):
    pass


class SingularDesignError(DataError):
    """The design matrix is rank deficient. ``columns`` names the columns that are linearly dependent."""

    def __init__(self, columns: Sequence[str]):
        self.columns = list(columns)
        super().__init__(
            "Design matrix is rank deficient; collinear column(s): {}".format(", ".join(self.columns) or "<unnamed>")
        )


class SeparationError(DataError):
    pass


class AllTrimmedError(DataError):
    pass


class EmptySubclassError(DataError):
    pass


class PositivityError(DataError):
    pass


class ScaleUnavailableError(DataError):
    pass


class ConstantCovariateError(DataError):
    pass


class ConfigError(DataError):
    """Invalid run configuration. ``field_path`` is the dotted path of the offending field."""

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}" if field_path else message)
        self.field_path = field_path
        self.message = message


class ConvergenceError(RcGpsError, RuntimeError):
    exit_code = 3


class ReplicateFailureError(RcGpsError, RuntimeError):
    """More replicates failed than the failure budget allows."""

    exit_code = 3

    def __init__(self, message: str, failures: List[Dict[str, Any]]):
        super().__init__(message)
        self.failures = failures
