"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: usage problems exit 1, capacity
problems exit 2, domain/range problems exit 3.
"""


class ZetaDerivError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(ZetaDerivError, ValueError):
    """An argument is malformed or outside its documented precondition."""


class CapacityError(ZetaDerivError):
    """The request exceeds a table, sieve or enumeration size limit."""


class DomainError(ZetaDerivError, ValueError):
    """A formula is evaluated outside the range where it is claimed."""


class OutOfRangeError(ZetaDerivError, ValueError):
    """A lookup falls outside a precomputed table."""
