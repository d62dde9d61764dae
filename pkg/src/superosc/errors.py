"""Exception types shared across the package.

Contract violations (bad indices, malformed arguments) raise the stdlib
``ValueError``/``TypeError``; the classes below cover failures that arise
during numerical evaluation of otherwise well-formed requests.
"""


class SuperoscError(Exception):
    """Base class for all package-specific errors."""


class EvaluationDomainError(SuperoscError):
    """An observable was evaluated at a point where it is undefined,
    e.g. a division by zero at the pole of a potential."""


class ChartDomainError(EvaluationDomainError):
    """A point lies outside the domain of the requested coordinate chart."""


class StepFailureError(SuperoscError):
    """The implicit solver failed to converge for one integration step."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class SamplingError(SuperoscError):
    """The rejection sampler could not find enough in-domain states."""


class ExprError(SuperoscError):
    """Base class for expression-language errors; carries a source position."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ExprSyntaxError(ExprError):
    """Malformed expression text."""


class ExprNameError(ExprError):
    """A symbol is neither a reserved generator nor a declared parameter."""


class ExprExponentError(ExprError):
    """An exponent is not an integer literal."""


class ExprDomainError(ExprError, EvaluationDomainError):
    """Evaluation hit a pole; the position locates the offending subexpression."""
