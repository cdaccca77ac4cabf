"""Exception types raised by tgextrap."""


class TensorShapeError(ValueError):
    """Operands have incompatible shapes or mode extents."""


class NonFiniteError(ValueError):
    """A NaN or Inf was passed where finite data is required."""


class SingularOperatorError(ArithmeticError):
    """A dense or triangular solve met a pivot below tolerance."""


class RankDeficiencyError(ArithmeticError):
    """Slices of a block are numerically linearly dependent.

    ``column`` is the 0-based index of the first slice that failed.
    """

    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"numerically rank deficient at slice {column} (0-based)")


class VanishingSumError(ArithmeticError):
    """The polynomial coefficients sum to zero; the extrapolant is undefined."""


class CoefficientSumError(ValueError):
    """Combination weights do not sum to one."""
