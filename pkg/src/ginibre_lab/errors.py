"""Exception types raised across the package."""


class GinibreLabError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(GinibreLabError, ValueError):
    pass


class InsufficientSamplesError(GinibreLabError, ValueError):
    pass


class SignatureError(GinibreLabError, ValueError):
    """Malformed moment signature (unequal lengths, negative exponents, bad syntax)."""


class NearDefectiveError(GinibreLabError, ArithmeticError):
    """The right-eigenvector matrix is too ill-conditioned to invert reliably."""

    def __init__(self, condition: float):
        super().__init__(f"eigenvector matrix condition estimate {condition:.3e} exceeds threshold")
        self.condition = condition


class DegenerateSpectrumError(GinibreLabError, ArithmeticError):
    pass


class AdiabaticBreakdownError(GinibreLabError, ArithmeticError):
    pass


class SingularSeparationError(GinibreLabError, ValueError):
    pass


class DomainError(GinibreLabError, ValueError):
    pass


class AccuracyError(GinibreLabError, ArithmeticError):
    """A quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error bound {achieved:.3e})")
        self.achieved = achieved


class SingularFitError(GinibreLabError, ValueError):
    pass
