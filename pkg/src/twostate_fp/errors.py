class SolverError(ArithmeticError):
    """A linear solve missed its residual target."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class DivergenceError(ArithmeticError):
    """Non-finite values appeared in the solution."""
