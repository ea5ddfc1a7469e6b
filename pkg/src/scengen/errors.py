"""Exception hierarchy shared by all scengen modules.

Three broad families map onto distinct CLI exit codes: configuration
problems, data problems, and numeric/model problems.
"""


class ScenGenError(Exception):
    """Base class for all scengen errors."""


class ConfigError(ScenGenError):
    """Invalid run configuration: unknown keys, out-of-range options, bad paths."""


class DataError(ScenGenError):
    """Malformed or inconsistent input data."""


class ParseError(DataError):
    """CSV row that cannot be parsed; message carries the line number."""


class DuplicateError(DataError):
    """Duplicated (timestamp, station) observation."""


class RangeError(DataError):
    """Value outside its declared invariant range."""


class AggregationError(DataError):
    """Hourly-to-monthly aggregation over an empty month."""


class InsufficientDataError(DataError):
    """Too few observations to fit a model component."""


class EvidenceCoverageError(DataError):
    """Supplied evidence scenarios do not cover every (scenario, month, station)."""


class NumericError(ScenGenError):
    """Numeric failure while fitting or evaluating a model."""


class DegenerateMarginalError(NumericError):
    """Zero sample variance; caller must treat the variable as constant."""


class CollinearityError(NumericError):
    """Rank-deficient parent matrix in a node regression."""
