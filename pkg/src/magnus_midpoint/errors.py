"""Exception types shared across the package."""


class UsageError(ValueError):
    """Bad input: wrong shapes, non-finite entries, out-of-range parameters."""


class NumericalFailure(ArithmeticError):
    """A computation could not meet its accuracy contract.

    ``stage`` names the step that failed (for example ``"expm"`` or
    ``"reference_propagator"``) so batch runs can report it.
    """

    def __init__(self, message, stage=None, step=None):
        super().__init__(message)
        self.stage = stage
        self.step = step
