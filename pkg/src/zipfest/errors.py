"""Exception and warning types raised across the package."""


class ZipfestError(Exception):
    """Base class for all errors raised by zipfest."""


class DomainError(ZipfestError, ValueError):
    """A parameter lies outside the domain of the model or function."""


class EmptyInput(ZipfestError, ValueError):
    """An operation received no data."""


class DegenerateInput(ZipfestError, ValueError):
    """The data cannot identify the exponent (e.g. a single observed event)."""


class SizeCap(ZipfestError, ValueError):
    """The requested exact computation exceeds its hard size limit."""


class NonConvergence(ZipfestError, RuntimeError):
    """ABC-PMC exhausted its simulation budget before filling a generation."""

    def __init__(self, message, tolerance=None, filled=None):
        super().__init__(message)
        self.tolerance = tolerance
        self.filled = filled


class NetworkError(ZipfestError, OSError):
    """A remote text could not be retrieved."""


class NotCached(ZipfestError, LookupError):
    """Offline mode was requested and the source is not in the cache."""


class DegenerateRegression(UserWarning):
    """Accepted summary statistics have zero variance; no regression adjustment."""


class MalformedBoilerplate(UserWarning):
    """Project Gutenberg START/END delimiters were not found."""
