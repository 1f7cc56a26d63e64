"""Exception types raised by monocox."""


class MonocoxError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(MonocoxError, ValueError):
    """Malformed input data (CSV cell, missing column, invalid value)."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        parts = [message]
        if row is not None:
            parts.append(f"row {row}")
        if column is not None:
            parts.append(f"column {column!r}")
        super().__init__(", ".join(parts))


class DomainError(MonocoxError, ValueError):
    """A function was evaluated outside the region where it is defined."""


class EstimationError(MonocoxError):
    """An estimator could not be computed for the given data."""


class NoEventsError(EstimationError):
    """The sample contains no uncensored observations."""

    def __init__(self, message="no events: every observation is censored"):
        super().__init__(message)


class NoFiniteMaximizerError(EstimationError):
    """The partial likelihood increases without bound (monotone likelihood)."""


class TheoremConditionError(MonocoxError, ValueError):
    """The regularity conditions behind a limit theorem do not hold."""
