"""Exception hierarchy shared by all modules."""


class LipfreeError(Exception):
    """Base class for errors raised by this package."""


class DomainError(LipfreeError, ValueError):
    """An argument does not describe a valid object (unknown point, bad offset...)."""


class PreconditionError(LipfreeError, ValueError):
    """Inputs are well-formed but violate an operation's precondition."""


class VerificationError(LipfreeError, RuntimeError):
    """A bound that the construction guarantees was not met.

    ``report`` carries whatever diagnostics were collected before failing.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
