"""Exception types shared across the package."""


class ConecalcError(Exception):
    """Base class for all conecalc errors."""


class InvalidMetricError(ConecalcError, ValueError):
    """Raised when a warped-metric description is unusable (e.g. no zero eigenvalue)."""


class ModeNotFoundError(ConecalcError, LookupError):
    """Raised when a mode id is not part of an operator or grid."""


class DomainError(ConecalcError, ValueError):
    """Raised when a parameter lies outside its mathematical domain."""


class InconsistentInputError(ConecalcError, ValueError):
    """Raised when structured inputs contradict each other (e.g. a pole that is no root)."""


class UnsupportedOperatorError(ConecalcError, ValueError):
    """Raised for operator classes the implementation deliberately refuses."""


class DivergentTransformError(ConecalcError, ArithmeticError):
    """Raised when a quadrature shows no sign of convergence for the sampled decay."""


class CoefficientError(ConecalcError, ValueError):
    """Raised when a diffusion coefficient fails positivity on the sampled range."""


class NonconvergenceError(ConecalcError, RuntimeError):
    """Raised when the per-step corrector stagnates; carries the last residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SingularSolveError(ConecalcError, RuntimeError):
    """Raised when a linear solve fails for a system expected to be regular."""


class ResolutionError(ConecalcError, ValueError):
    """Raised when a grid is too coarse for the requested measurement."""
