"""Exception hierarchy shared by all modules.

Exit-code mapping used by the CLI: CapacityError -> 2, ValidationError -> 3,
InternalCheckError -> 4.
"""


class HurwitzLabError(Exception):
    """Base class for package errors."""


class ValidationError(HurwitzLabError):
    """Bad input: violated precondition, malformed table, invalid config."""


class CapacityError(HurwitzLabError):
    """A configured budget (order cap, tuple budget, memory budget) was exceeded.

    The operation fails loudly instead of degrading.
    """


class InternalCheckError(HurwitzLabError):
    """A self-check that must hold by construction failed; indicates a bug."""
