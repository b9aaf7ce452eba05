"""Exception hierarchy shared by all modules.

Every error carries the process exit code the CLI should use: 2 for
accuracy failures (the computation ran but could not certify its result)
and 3 for precondition failures (the request itself is invalid).
"""


class HankelLabError(Exception):
    exit_code = 1


class PreconditionError(HankelLabError, ValueError):
    exit_code = 3


class InvalidArgumentError(PreconditionError):
    pass


class UnsupportedOrderError(PreconditionError):
    pass


class UnsupportedDerivativeError(PreconditionError):
    pass


class OutOfDomainError(PreconditionError):
    pass


class UnsupportedInputError(PreconditionError):
    pass


class DivergentIntegralError(PreconditionError):
    pass


class EmptyInputError(PreconditionError):
    pass


class LabelLookupError(PreconditionError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class AccuracyFailure(HankelLabError):
    """Tolerance not reached; ``achieved`` holds the best error estimate."""

    exit_code = 2

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class InconclusiveTruncation(AccuracyFailure):
    pass


class FitError(AccuracyFailure):
    pass


class StepSizeError(AccuracyFailure):
    pass
