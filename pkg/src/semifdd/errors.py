"""Exception types shared across the package."""


class FddError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(FddError):
    """Array widths or lengths do not match what an operation requires."""


class NumericError(FddError):
    """Non-finite values showed up where finite arithmetic was expected."""


class DivergenceError(NumericError):
    """Training produced a non-finite loss; carries where it happened."""

    def __init__(self, step: str, iteration: int, minibatch: int):
        self.step = step
        self.iteration = iteration
        self.minibatch = minibatch
        super().__init__(
            f"non-finite loss in step '{step}' "
            f"(iteration {iteration}, minibatch {minibatch})"
        )


class StateError(FddError):
    """An operation was called out of order (e.g. backward before forward)."""


class InputError(FddError):
    """Caller-supplied data violates a precondition."""


class DataFormatError(InputError):
    """A data file could not be parsed; message carries the line number."""
