"""Exception hierarchy shared by every module of the package."""


class GhCopulaError(Exception):
    """Base class for all package errors."""


class DomainError(GhCopulaError, ValueError):
    """An argument lies outside the domain of a function or parameter space."""


class ModelError(GhCopulaError):
    """A model object cannot be built (e.g. a non positive-definite matrix)."""


class DataError(GhCopulaError):
    """Input data is malformed, inconsistent or insufficient."""


class ConfigError(GhCopulaError):
    """An experiment configuration is invalid or incomplete."""


class NumericalError(GhCopulaError):
    """A numerical routine failed to produce a finite or accurate result."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
