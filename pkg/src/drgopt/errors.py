"""Exception types raised across the package."""


class DrgError(Exception):
    """Base class for all package errors."""


class NearPoleError(DrgError):
    """Spherical angle too close to a pole for the incremental update path."""


class SingularSolveError(DrgError):
    """A linear solve inside a retraction failed."""


class EigenFailure(DrgError):
    """A symmetric eigendecomposition did not converge."""


class DomainError(DrgError):
    """A point lies outside the inverse-retraction domain of a center."""


class EvaluationError(DrgError):
    """An energy difference evaluated to a non-finite value."""


class NoBracket(DrgError):
    """No sign change could be established for a scalar root problem."""


class MaxEvalExceeded(DrgError):
    """A root solver ran out of function evaluations.

    ``best`` holds the bracket end with the smallest residual seen so far.
    """

    def __init__(self, message, best=None, fbest=None):
        super().__init__(message)
        self.best = best
        self.fbest = fbest


class ParseError(DrgError):
    """Malformed image file; ``line`` is 1-based."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class RangeError(ParseError):
    """A phase value outside (-pi, pi]."""


class NotSpdError(ParseError):
    """An atom that is not symmetric positive definite."""

    def __init__(self, message, atom=None, line=None):
        if atom is not None:
            message = f"atom {atom}: {message}"
        super().__init__(message, line=line)
        self.atom = atom
