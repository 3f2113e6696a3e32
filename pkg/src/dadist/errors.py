"""Exception hierarchy shared by all dadist modules."""


class DadistError(Exception):
    """Base class for user-facing errors raised by dadist."""


class DomainError(DadistError, ValueError):
    """Argument outside the open domain of an operation.

    Parameters
    ----------
    message : str
        Human readable description.
    predicates : list of str, optional
        Names of the violated domain predicates.
    """

    def __init__(self, message, predicates=None):
        super().__init__(message)
        self.predicates = list(predicates or [])


class ConfigurationError(DadistError, ValueError):
    """Inconsistent shapes, parameters or option values."""


class SingularityError(DadistError, ArithmeticError):
    """A matrix or Jacobian is numerically singular."""


class UnsupportedAlgebraError(DadistError, NotImplementedError):
    """Operation not available for the requested algebra."""


class DegenerateInputError(DadistError, ValueError):
    """Input hits a measure-zero degenerate case, e.g. tied values."""
