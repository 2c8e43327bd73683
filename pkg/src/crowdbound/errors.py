"""Exception hierarchy shared by every engine."""


class CrowdboundError(Exception):
    """Base class for all errors raised by this package."""


class ParameterDomainError(CrowdboundError, ValueError):
    """A numeric parameter lies outside its admissible domain."""


class EmptyInputError(CrowdboundError, ValueError):
    pass


class InsufficientDataError(CrowdboundError, ValueError):
    pass


class SupportError(CrowdboundError, ValueError):
    """Data fall outside the support of the requested family."""


class DegenerateDataError(CrowdboundError, ValueError):
    """Data have zero variance, so no non-degenerate fit exists."""


class UndefinedCentralizationError(CrowdboundError, ValueError):
    pass


class ReducibleOrPeriodicError(CrowdboundError, ArithmeticError):
    """The listening matrix has no unique, attracting stationary influence vector."""


class InfeasibleConstraintError(CrowdboundError, ValueError):
    pass


class SeparationError(CrowdboundError, ArithmeticError):
    """Logistic likelihood is maximized at infinity (perfect or quasi separation)."""


class CollinearityError(CrowdboundError, ArithmeticError):
    pass


class DegenerateTaskError(CrowdboundError, ValueError):
    def __init__(self, tasks):
        self.tasks = list(tasks)
        super().__init__(
            "cannot z-score tasks with fewer than 2 trials or zero error variance: "
            + ", ".join(self.tasks)
        )


class ParseError(CrowdboundError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InsufficientDesignError(CrowdboundError, ValueError):
    """The trial set lacks a condition needed by one of the regressions."""
