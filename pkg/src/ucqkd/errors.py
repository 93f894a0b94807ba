"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI:

* ``UsageError``      -> 64   (bad flags / malformed config)
* ``InvariantError``  -> 2    (a mathematical invariant failed at runtime)
* ``CapacityError``   -> 3    (problem size exceeds a hard resource cap)
"""


class UcqkdError(Exception):
    """Base class for all package-specific errors."""


class UsageError(UcqkdError):
    """Malformed user input (CLI flags, config files, epsilon literals)."""


class InvariantError(UcqkdError):
    """A checked mathematical invariant was violated."""


class DomainError(UcqkdError):
    """An argument left the mathematical domain of an operation
    (zero inverse, singular matrix, unreachable root, support violation)."""


class CapacityError(UcqkdError):
    """Requested problem size exceeds a documented hard cap."""


class InfeasibleError(UcqkdError):
    """A constraint set admits no strictly feasible point.

    Carries the index of the most violated constraint when known.
    """

    def __init__(self, message: str, constraint_index: int | None = None):
        super().__init__(message)
        self.constraint_index = constraint_index
