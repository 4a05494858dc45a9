"""Exception taxonomy shared by the whole package.

The CLI maps these onto its exit-code contract: validation and domain
problems exit with 2, numeric failures and exhausted budgets with 3,
violated bound checks with 1.
"""


class DiracTraceError(Exception):
    """Base class for all package errors."""


class DomainError(DiracTraceError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ValidationError(DiracTraceError, ValueError):
    """A configuration or input file is malformed or inconsistent."""


class NumericError(DiracTraceError, RuntimeError):
    """A quadrature or other numerical routine failed to converge, or two
    independent schemes disagree beyond the allowed factor."""


class BudgetExceededError(DiracTraceError, RuntimeError):
    """An enumeration exceeded its node budget; partial results are withheld."""
