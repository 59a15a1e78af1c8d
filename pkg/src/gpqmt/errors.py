"""Exception hierarchy.

Parameter problems raise :class:`InvalidParameterError` (also a ``ValueError``).
Everything that goes wrong inside the linear algebra derives from
:class:`NumericalError`, which the CLI maps to its own exit code.
"""


class GpqError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(GpqError, ValueError):
    pass


class ResourceLimitError(GpqError):
    """A requested rule would exceed the configured point budget."""


class NumericalError(GpqError, ArithmeticError):
    pass


class SingularCovarianceError(NumericalError):
    pass


class IllConditionedKernelError(NumericalError):
    pass


class SingularInnovationError(NumericalError):
    pass


class DegenerateEnsembleError(NumericalError):
    pass


class EvaluationError(NumericalError):
    """A nonlinearity returned a non-finite value at one of the sigma-points."""

    def __init__(self, message, index=None, point=None):
        super().__init__(message)
        self.index = index
        self.point = point


class FilterStepError(NumericalError):
    """Wraps any failure inside a filter recursion with the step it happened at."""

    def __init__(self, step, stage, cause):
        super().__init__(f"step {step} ({stage}): {cause}")
        self.step = step
        self.stage = stage
        self.cause = cause
