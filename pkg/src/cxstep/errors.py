"""Exception types shared across the package."""


class CxStepError(Exception):
    """Base class for all package errors."""


class NumericalFailure(CxStepError):
    """An iterative numerical routine failed to reach its accuracy target."""


class GridSizeError(CxStepError, ValueError):
    pass


class DivergenceError(CxStepError):
    """A time stepper produced a non-finite or runaway state.

    ``time`` is the outer time at which the failing step started and
    ``substep`` the index of the offending sub-step (``None`` when the outer
    update itself blew up).
    """

    def __init__(self, message, time=None, substep=None):
        super().__init__(message)
        self.time = time
        self.substep = substep


class InfeasibleError(CxStepError):
    """No positive step size stabilizes the requested spectrum."""


class DegeneracyError(CxStepError):
    pass
