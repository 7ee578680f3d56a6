"""Exception types shared across the package.

Two broad families matter for the CLI exit-code contract: input problems
(parsing, configuration, empty selections) and fit problems (not enough
or degenerate data for an estimator).
"""


class WindbandError(Exception):
    """Base class for all errors raised by this package."""


class InputError(WindbandError):
    """A file, stream or configuration could not be used as given."""


class MalformedRowError(InputError):
    """A CSV row failed to parse; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DuplicateKeyError(InputError):
    """Two rows share a key that must be unique."""


class EmptySelectionError(InputError):
    """A filter removed every sample."""


class EmptyJoinError(InputError):
    """Joining realized hours with forecasts produced no matches."""


class ConfigError(InputError):
    """A configuration value violates its invariants."""


class FitError(WindbandError):
    """An estimator could not produce a result."""


class InsufficientDataError(FitError):
    """Fewer samples (or bins) than the estimator needs."""


class DegenerateDataError(FitError):
    """Data has no spread where the estimator requires some."""


class StageError(WindbandError):
    """A pipeline stage failed; carries the stage name and the cause."""

    def __init__(self, stage: str, cause: WindbandError):
        super().__init__(f"{stage} stage: {cause}")
        self.stage = stage
        self.cause = cause
