"""Shared exception types."""

__all__ = ["BlowUpError"]


class BlowUpError(ArithmeticError):
    """A transform blew up (Riccati explosion, singular determinant, zero mass)
    where the caller required a finite value."""

    def __init__(self, message, t_star=None):
        super().__init__(message)
        self.t_star = t_star
