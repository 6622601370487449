"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class InsufficientData(ValueError):
    """Too few observations to compute a statistic."""


class DegenerateInput(ValueError):
    """Input data with zero spread where spread is required."""


class InfeasibleTarget(ValueError):
    """A design target that no sample size can reach."""


class UndefinedStatistic(ArithmeticError):
    """The test statistic is 0/0."""


class NumericalFailure(ArithmeticError):
    """An iterative routine failed to converge.

    Parameters
    ----------
    message : str
        Human readable description.
    **diagnostics
        Routine-specific state at the point of failure (iteration count,
        last increment, arguments), kept on ``self.diagnostics``.
    """

    def __init__(self, message, **diagnostics):
        self.diagnostics = diagnostics
        if diagnostics:
            detail = ", ".join(f"{k}={v!r}" for k, v in diagnostics.items())
            message = f"{message} ({detail})"
        super().__init__(message)
