"""Exception types shared across modules."""


class DimensionError(ValueError):
    """Operand shapes or subsystem dimensions are inconsistent."""


class DomainError(ValueError):
    """A parameter lies outside its admissible range."""


class NumericalError(RuntimeError):
    """An iterative routine failed to converge."""


class UnsupportedError(NotImplementedError):
    """The requested case is deliberately not implemented."""


class SolverError(RuntimeError):
    """A conic solve ended without a certified optimum."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution
