"""Exception hierarchy.

Input problems derive from ``InputError`` (a ``ValueError``); numerical
breakdowns derive from ``NumericalError`` (an ``ArithmeticError``). The CLI
maps the first family to exit status 1 and the second to exit status 2.
"""


class InputError(ValueError):
    """Rejected input: bad shape, bad range, bad config, malformed file."""


class ParseError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DomainError(InputError):
    """A state lies outside the model's state space."""


class NumericalError(ArithmeticError):
    pass


class SingularDiffusionError(NumericalError):
    """S(x) is not numerically positive definite at some state."""

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class NotPSDError(NumericalError):
    pass


class SingularSystemError(NumericalError):
    pass


class NonIdentifiedError(NumericalError):
    """The log-likelihood has no unique maximiser on this path."""


class SimulationDivergedError(NumericalError):
    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message)
