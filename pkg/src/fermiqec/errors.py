"""Exception types raised by the simulator."""


class InvalidArgument(ValueError):
    """An argument is outside the domain an operation accepts."""


class ZeroProbabilityOutcome(ArithmeticError):
    """A Kraus branch with (numerically) vanishing probability was applied."""


class NumericalDegeneracy(ArithmeticError):
    """Every branch of a measurement fell below the probability floor."""


class InternalInvariantViolation(RuntimeError):
    """A quantity that must hold by construction was found violated."""


class FitDiverged(RuntimeError):
    """The threshold fit could not locate a crossing in the data."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
