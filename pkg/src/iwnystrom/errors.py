class InputError(ValueError):
    """Invalid argument, configuration, or input file."""


class NumericalError(ArithmeticError):
    """A linear solve could not be completed."""

    def __init__(self, message, jitter=None):
        super().__init__(message)
        self.jitter = jitter
