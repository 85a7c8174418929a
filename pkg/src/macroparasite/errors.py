"""Exception types raised across the package."""


class MacroparasiteError(Exception):
    """Base class for package errors."""


class InvalidParameters(MacroparasiteError, ValueError):
    """A distribution or model parameter violates its invariants."""


class QuadratureError(MacroparasiteError, ArithmeticError):
    """Adaptive quadrature did not reach its error target.

    ``error_estimate`` holds the best achieved estimate.
    """

    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3g})")
        self.error_estimate = error_estimate


class InversionError(MacroparasiteError, ArithmeticError):
    """PGF inversion failed (budget exceeded or excessive negative mass)."""


class NoComponentError(MacroparasiteError, ValueError):
    """Requested component F_j does not exist because beta_j == 0."""


class ConsistencyError(MacroparasiteError):
    """Analytic and numerically inverted quantities disagree."""
