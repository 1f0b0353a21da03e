"""Exception hierarchy shared by every module."""


class TVARError(Exception):
    """Base class for all library errors."""


class ValidationError(TVARError, ValueError):
    """Bad input: wrong shape, out-of-range parameter, inconsistent objects."""


class DomainError(ValidationError):
    """Argument outside the mathematical domain of the operation."""


class NumericalError(TVARError, ArithmeticError):
    """A numerical procedure failed (non-convergence, singular system)."""


class StabilityError(NumericalError):
    """Autoregressive polynomial has a root on or inside the unit circle."""
