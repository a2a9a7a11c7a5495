"""Exception hierarchy.

The CLI maps these onto distinct exit codes, so keep the tree shallow.
"""


class ThreeHalvesError(Exception):
    """Base class for all package errors."""


class DomainError(ThreeHalvesError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class InfiniteMoment(DomainError):
    """Requested moment of the squared Bessel process does not exist."""


class DomainConditionError(DomainError):
    """The Laplace-functional domain condition beta > 0 is violated."""


class ConvergenceError(ThreeHalvesError, ArithmeticError):
    """A series or root search ran out of iterations."""


class ConstraintViolation(ThreeHalvesError, ValueError):
    """Model parameters break one of the structural inequalities.

    Parameters
    ----------
    inequality : str
        Human readable form of the failed inequality, e.g. ``"a1 >= 2*gamma"``.
    detail : str
        Numbers that triggered the failure.
    """

    def __init__(self, inequality, detail=""):
        self.inequality = inequality
        self.detail = detail
        msg = f"constraint violated: {inequality}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class DataError(ThreeHalvesError, ValueError):
    """Input data (CSV rows, price series) is malformed."""
