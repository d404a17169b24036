"""Exception types shared across the package."""


class QuadratureError(ArithmeticError):
    """A quadrature did not converge or an integral diverges."""


class TruncationError(QuadratureError):
    """The certified truncation error exceeds the allowed budget."""


class IntegrandError(ValueError):
    """An integrand is outside the admissible class for the requested operation."""
