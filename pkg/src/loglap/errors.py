"""Exception types shared across the package."""


class LoglapError(Exception):
    """Base class for all package errors."""


class QuadratureError(LoglapError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Parameters
    ----------
    message : str
        Human readable reason.
    value : float, optional
        Best estimate available when the routine gave up.
    error : float, optional
        Error estimate attached to ``value``.
    """

    def __init__(self, message, value=float("nan"), error=float("inf")):
        super().__init__(message)
        self.value = value
        self.error = error


class ConvergenceError(LoglapError):
    """A limit extraction did not show convergence."""


class ConfigError(LoglapError):
    """Invalid study configuration or command-line input."""
