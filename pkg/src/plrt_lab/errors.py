"""Exception and warning types shared across the package."""


class PlrtError(Exception):
    """Base class for all errors raised by plrt_lab."""


class NotPositiveDefinite(PlrtError):
    """A matrix expected to be SPD failed its Cholesky factorization."""


class DenominatorUnderflow(PlrtError):
    """A rank-one inverse update hit a vanishing denominator."""


class DimensionMismatch(PlrtError):
    """Input dimensions do not match the model or each other."""


class EmptyDataset(PlrtError):
    """Training was requested on a dataset with no rows."""


class InstanceTooLarge(PlrtError):
    """The brute-force oracle refuses instances above its size cap."""


class DimensionOverflow(PlrtError):
    """Explicit covariance statistics are capped at d <= 4096."""


class DegenerateData(PlrtError):
    """A data statistic needed for a derived quantity is identically zero."""


class InvalidDelta(PlrtError):
    """Confidence level must lie strictly inside (0, 1)."""


class MissingColumn(PlrtError):
    """A referenced column is absent from the CSV header."""


class ParseError(PlrtError):
    """A CSV cell could not be parsed as a decimal real."""

    def __init__(self, row, column, value):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}, column {column!r}: cannot parse {value!r}")


class EmptyFile(PlrtError):
    """The CSV file holds no data rows."""


class DegenerateSplit(PlrtError):
    """A train/test split would leave one side empty."""


class LengthMismatch(PlrtError):
    """Prediction and target vectors differ in length."""


class SchemaViolation(PlrtError):
    """A serialized model does not satisfy the JSON schema."""


class VersionMismatch(PlrtError):
    """A serialized model declares an unsupported format version."""


class NoConvergence(RuntimeWarning):
    """An iterative solver hit its iteration cap; the best iterate is returned."""
