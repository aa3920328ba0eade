"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """Base class for numerical failures (diagonalization, fits, integration)."""


class ConvergenceError(NumericalError):
    """A result did not converge under basis/step refinement.

    Carries both the coarse and refined values so callers can judge the drift.
    """

    def __init__(self, message, coarse=None, refined=None):
        super().__init__(message)
        self.coarse = coarse
        self.refined = refined


class LabelingError(NumericalError):
    """A required dressed-state label is missing or ambiguous."""


class FitError(NumericalError):
    """A least-squares or mixture fit failed or returned unusable parameters."""
