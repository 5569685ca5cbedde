"""Exception types raised by rwlab."""


class RwlabError(Exception):
    """Base class for all library errors."""


class DomainError(RwlabError, ValueError):
    """An argument lies outside the domain of the operation (e.g. r >= 1)."""


class ParameterError(RwlabError, ValueError):
    """A weight or operator parameter is invalid."""


class AccuracyError(RwlabError):
    """A numerical routine failed to reach its tolerance.

    ``estimate`` carries the best value obtained and ``error`` its error bound.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class DegeneracyError(RwlabError):
    """The input is degenerate for the requested construction."""


class RangeError(RwlabError, IndexError):
    """An index lies outside the computed range."""


class ConfigError(RwlabError, ValueError):
    """A scenario or CLI configuration is invalid."""
