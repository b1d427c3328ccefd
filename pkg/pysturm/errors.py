"""
Errors raised by pysturm.

Input problems derive from ValueError and numerical breakdowns from
RuntimeError. Results contradicting a proven statement raise a
ContractViolation.
"""


class ExpressionSyntaxError(ValueError):

    def __init__(self, message: str, offset: int, expected: str) -> None:
        """
        Raised when a potential expression cannot be parsed.

        Parameters
        ----------
        message : str
            Human readable description.
        offset : int
            Byte offset of the offending token in the utf-8 encoded source.
        expected : str
            Description of what the parser expected at that offset.
        """
        super().__init__('{} at offset {} (expected {})'.format(message, offset, expected))
        self.offset = offset
        self.expected = expected


class EvalDomainError(ArithmeticError):
    """Division by zero or non-finite value while evaluating an expression."""


class BudgetExceeded(ValueError):
    """Requested size is beyond the exact-arithmetic budget."""


class OrderBudget(ValueError):
    """Requested derivative order is beyond the supported cap."""


class ZeroVector(ValueError):
    """A coefficient vector is identically zero."""


class IntegrationFailure(RuntimeError):
    """The adaptive Runge-Kutta integration did not complete."""


class BracketFailure(RuntimeError):
    """No eigenvalue bracket was found within the search range."""


class DegenerateProbe(RuntimeError):
    """Every probe determinant used for sign normalization vanished."""


class ContractViolation(ArithmeticError):
    """Base class for results contradicting a proven statement."""


class NotConstant(ContractViolation):
    pass


class NearSingular(ContractViolation):
    pass


class UnresolvedZero(ContractViolation):
    pass


class VerificationFailure(ContractViolation):
    pass
