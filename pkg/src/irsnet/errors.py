"""Exception hierarchy shared by every irsnet module."""


class IrsNetError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(IrsNetError, ValueError):
    """An argument violates the operation's preconditions."""


class DegenerateInstanceError(InvalidArgumentError):
    """The instance makes a quantity undefined (e.g. no scattered interference)."""


class UnsupportedRegimeError(InvalidArgumentError):
    """The requested result is not available in this parameter regime."""


class PreconditionError(InvalidArgumentError):
    """An algorithm was called outside its validity range (e.g. M < 2)."""


class NumericalError(IrsNetError, ArithmeticError):
    """An iterative numerical routine failed to converge or broke down."""


class CapacityError(IrsNetError):
    """The instance is too large for exhaustive search."""
