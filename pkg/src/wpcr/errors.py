"""Error taxonomy shared by all modules.

ValidationError subclasses signal bad parameters or inputs (CLI exit code 2);
NumericError subclasses signal runtime numerical trouble (CLI exit code 3).
"""


class ValidationError(ValueError):
    pass


class InvalidParameterError(ValidationError):
    pass


class InvalidInputError(ValidationError):
    pass


class HypothesisViolatedError(ValidationError):
    pass


class UnsupportedMeasureError(ValidationError):
    pass


class NumericError(RuntimeError):
    pass


class NumericFailureError(NumericError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DegenerateWeightsError(NumericError):
    pass


class InvalidSamplePlanError(NumericError):
    pass
