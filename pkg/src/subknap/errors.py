"""Exception hierarchy shared by every module."""


class SubknapError(Exception):
    pass


class InputError(SubknapError, ValueError):
    """Malformed instance, index out of range, or violated precondition."""


class PreconditionError(InputError):
    pass


class ConfigurationError(InputError):
    pass


class CapacityError(SubknapError):
    """The requested enumeration exceeds the desk-scale limits."""


class SolverError(SubknapError):
    """A continuous solver failed inside the guessing loop."""

    def __init__(self, message, guess=()):
        super().__init__(message)
        self.guess = tuple(guess)
