"""Exception types raised across the package."""


class RankSolutionsError(Exception):
    """Base class for all package errors."""


class InvalidInputError(RankSolutionsError, ValueError):
    pass


class SingularMatrixError(RankSolutionsError, ArithmeticError):
    """Elimination met a pivot below tolerance."""

    def __init__(self, message, pivot=0.0):
        super().__init__(message)
        self.pivot = float(pivot)


class SingularPiError(SingularMatrixError):
    """The pivot block of a wave-vector family is not invertible."""


class DomainError(RankSolutionsError, ValueError):
    """A point lies outside the declared domain of a system, profile or field."""


class KernelLostError(RankSolutionsError):
    def __init__(self, message, r=None):
        super().__init__(message)
        self.r = r


class AmbiguousKernelError(RankSolutionsError):
    def __init__(self, message, r=None):
        super().__init__(message)
        self.r = r


class Phi1SingularError(RankSolutionsError):
    """Gradient catastrophe: det(Phi1) fell below the configured threshold."""

    def __init__(self, message, det=0.0, u=None):
        super().__init__(message)
        self.det = float(det)
        self.u = u


class NoConvergenceError(RankSolutionsError):
    """Newton continuation failed; ``trail`` lists the attempted sub-steps."""

    def __init__(self, message, trail=()):
        super().__init__(message)
        self.trail = list(trail)


class StencilError(RankSolutionsError):
    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x


class InconsistentProfileError(RankSolutionsError, ValueError):
    pass


class NotFoundError(RankSolutionsError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""
