"""Exception and warning types shared across the package."""


class OdtrecError(Exception):
    """Base class for all package errors."""


class FeasibilityError(OdtrecError):
    """A hard geometric precondition is violated (named in the message)."""


class DegenerateInstanceError(OdtrecError):
    """A solve step hit a rank-deficient or degenerate subproblem."""


class ConvergenceError(OdtrecError):
    """An iterative solve exhausted its sweep budget without converging."""


class FormatError(OdtrecError):
    """Malformed ODT1 payload or metadata."""


class FeasibilityWarning(UserWarning):
    """Instance sits between the necessary and the sufficient bounds."""
