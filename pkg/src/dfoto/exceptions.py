"""Exception types shared across the package."""


class DfotoError(Exception):
    """Base class for all package-specific errors."""


class PoisednessError(DfotoError):
    """The interpolation geometry is singular to working precision.

    Carries the reciprocal condition estimate of the KKT matrix when one
    was computed (``None`` when singularity was detected structurally,
    e.g. duplicated points).
    """

    def __init__(self, message, rcond=None):
        super().__init__(message)
        self.rcond = rcond


class ProtocolError(DfotoError):
    """The batch-query protocol was violated (e.g. non-increasing step)."""


class EvaluationError(DfotoError):
    """The black box returned a non-finite value.  Carries the point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class InconclusiveError(DfotoError):
    """Preconditions of an optimality-preservation check do not hold."""


class DegenerateProblemError(DfotoError):
    """A benchmark problem cannot be normalized (f_best >= f_start)."""
