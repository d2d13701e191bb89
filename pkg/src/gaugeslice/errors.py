"""Exception types shared across the package."""


class GaugesliceError(Exception):
    """Base class for all package-specific errors."""


class SingularNodeError(GaugesliceError):
    """A field evaluation was requested at (or too close to) a registered singular point."""


class NonFiniteError(GaugesliceError):
    """An evaluator returned a non-finite value away from its registered singular set."""


class GridMismatchError(GaugesliceError):
    """Two wavefunctions that must share a grid do not."""


class QuadratureDivergenceError(GaugesliceError):
    """Adaptive line-integral quadrature failed to converge off the singular set."""


class EigenFailureError(GaugesliceError):
    """Dense Hermitian eigendecomposition failed."""


class SizeError(GaugesliceError):
    """A dense operator would exceed the configured size cap."""


class CapExceededError(GaugesliceError):
    """A quadrature run would exceed the configured evaluation cap."""

    def __init__(self, message, suggested_slices=None):
        super().__init__(message)
        self.suggested_slices = suggested_slices


class ScheduleError(GaugesliceError):
    """A box/gap schedule is not monotone."""
