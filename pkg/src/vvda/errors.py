"""Exception types shared across the package.

The CLI maps these onto distinct process exit codes, so solver failures,
bad configuration, blow-up and I/O problems stay distinguishable in
scripted sweeps.
"""


class VVDAError(Exception):
    """Base class for all package errors."""


class InvalidArgument(VVDAError, ValueError):
    """A parameter violates a documented precondition."""


class UnsupportedConfiguration(VVDAError):
    """A structurally valid but unsupported combination was requested."""


class GeometryError(VVDAError):
    """Degenerate geometry (zero-area triangle, bad Jacobian)."""


class SolverError(VVDAError, RuntimeError):
    """A linear solve failed or did not reach its residual contract."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class StateError(VVDAError):
    """Time stepper invoked with an inconsistent state."""


class BlowUpError(VVDAError):
    """A monitored norm exceeded the blow-up threshold."""


class ObservationGapError(VVDAError, LookupError):
    """Requested observation time is not covered by the source."""
