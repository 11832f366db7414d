"""Exception hierarchy shared by every lab module."""


class DircaError(Exception):
    """Base class for all errors raised by the package."""


class BadAlphabet(DircaError, ValueError):
    pass


class AllZeroRule(DircaError, ValueError):
    pass


class WindowTooSmall(DircaError, ValueError):
    """The window does not cover the coordinates an operation depends on.

    ``required`` holds the needed interval when it is known.
    """

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class BudgetExceeded(DircaError):
    def __init__(self, message, needed=None, budget=None):
        super().__init__(message)
        self.needed = needed
        self.budget = budget


class HypothesisViolation(DircaError, ValueError):
    def __init__(self, failed):
        self.failed = list(failed)
        super().__init__("hypotheses not satisfied: " + ", ".join(self.failed))


class NotPrime(DircaError, ValueError):
    pass


class PrefixTooShort(DircaError, ValueError):
    pass


class ParseError(DircaError, ValueError):
    pass
