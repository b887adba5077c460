"""Exception types shared by all modules."""


class ZKLabError(Exception):
    """Base class for every error raised by the package."""


class ContractViolation(ZKLabError, ValueError):
    """An input violates a documented precondition."""


class SingularWeightError(ZKLabError, ValueError):
    """A negative-order Riesz weight met a nonzero zero-frequency coefficient."""


class DegenerateInputError(ZKLabError, ValueError):
    """An estimate's right-hand side vanishes, so no quotient exists."""


class BlowUpDetected(ZKLabError, RuntimeError):
    """The time integrator produced non-finite values.

    Attributes
    ----------
    t_last : float
        Last time at which the state was finite.
    """

    def __init__(self, t_last: float, message: str | None = None):
        self.t_last = float(t_last)
        super().__init__(message or f"non-finite state after t = {self.t_last:g}")
