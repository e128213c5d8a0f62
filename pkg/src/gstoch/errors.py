"""Shared exception types, mapped to CLI exit codes by gstoch.cli."""


class GstochError(Exception):
    pass


class ConfigurationError(GstochError, ValueError):
    """Invalid configuration (bad grid alignment, unstable time step, bad weights...).

    `field` optionally carries a dotted path into the offending config entry.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class InputError(GstochError, ValueError):
    """Invalid runtime input (non-finite data, out-of-domain evaluation)."""


class EstimationError(GstochError, RuntimeError):
    """Monte Carlo estimate unusable (too many rejected samples)."""


class StepError(GstochError, RuntimeError):
    """Time stepping failed at a specific step index."""

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


class DivergenceError(StepError):
    """State left the admissible range during time stepping."""
