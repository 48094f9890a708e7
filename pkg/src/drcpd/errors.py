"""Exception types raised across the package."""


class DrcpdError(Exception):
    """Base class for package errors."""


class RangeError(DrcpdError, IndexError):
    """A time index or window falls outside the available history."""


class ParseError(DrcpdError, ValueError):
    """Malformed input file. ``lineno`` is 1-based, or None for whole-file problems."""

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class SolverError(DrcpdError, ArithmeticError):
    """A linear system could not be solved."""


class UndefinedMetricError(DrcpdError, ValueError):
    """Metric is undefined for the given labels (e.g. a single class)."""
