"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class UnsupportedConfigurationError(DomainError):
    """The requested engine does not cover this system (e.g. N != 2, finite chi)."""


class ConfigError(DomainError):
    """Malformed configuration file or lattice settings."""


class QuadratureError(RuntimeError):
    """Numerical quadrature did not reach the requested tolerance."""

    def __init__(self, message, achieved_error=None, value=None):
        super().__init__(message)
        self.achieved_error = achieved_error
        self.value = value


class DiagnosticError(RuntimeError):
    """A lattice run finished but failed one of its self-consistency diagnostics."""


class ResourceError(RuntimeError):
    """A computation would exceed the configured memory cap."""
