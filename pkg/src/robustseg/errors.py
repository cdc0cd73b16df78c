"""Exception types raised by robustseg."""


class ParameterError(ValueError):
    """An argument is outside the range an operation accepts."""


class NumericalDegeneracyError(ArithmeticError):
    """A basis could not be orthonormalized to the required precision."""


class DegenerateSampleError(ArithmeticError):
    """A pixel subset gives a singular or rank-deficient design submatrix."""


class NoModelError(RuntimeError):
    """Every RANSAC iteration drew a degenerate sample."""


class UnreachableConfidenceError(ArithmeticError):
    """The requested RANSAC confidence cannot be reached in floating point."""


class FixtureError(RuntimeError):
    """A synthetic fixture could not honour its recipe."""
