"""Exception types shared across the package."""


class ValidationError(ValueError):
    """A configuration, scenario or argument violates an invariant."""


class SolverError(RuntimeError):
    """An iterative solver failed to converge.

    Carries the last iterate and the residual norm so the caller can
    inspect how far the solve got.
    """

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class TargetUnreachableError(RuntimeError):
    """A nulling target cannot be met even with every data carrier disabled."""
