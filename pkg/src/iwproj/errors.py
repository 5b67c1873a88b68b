"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Input violates a documented precondition."""


class NumericFailureError(ArithmeticError):
    """A factorization or eigensolver could not produce a valid result."""
