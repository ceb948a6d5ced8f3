"""Exception and warning types shared across the package."""


class QubusError(Exception):
    """Base class for all package errors."""


class LayoutError(QubusError):
    """Subsystem layouts or operator dimensions do not match."""


class TruncationError(QubusError):
    """Fock-space truncation too small for the requested state."""


class SingularDetuningError(QubusError):
    """A dispersive quantity was requested at zero detuning."""


class UnsupportedConfigurationError(QubusError):
    """Parameters outside the range an analytic result is defined for."""


class IntegrationError(QubusError):
    """Time stepping failed its local accuracy or sanity checks."""


class NumericalError(QubusError):
    """Non-finite values or unusable linear-algebra output."""


class NonUniqueSteadyStateError(QubusError):
    """The Liouvillian null space is degenerate; no unique fixed point."""


class NoPeakError(QubusError):
    """No resonance maximum found in the requested frequency window."""


class ConfigError(QubusError):
    """Invalid experiment configuration file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class RegimeWarning(UserWarning):
    """Parameters are outside the regime an approximation assumes."""


class TruncationWarning(UserWarning):
    """Fock truncation was capped below the requested tail target."""
