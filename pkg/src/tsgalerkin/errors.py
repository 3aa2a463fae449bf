"""Exception hierarchy shared by all modules."""


class TsGalerkinError(Exception):
    """Base class for package errors."""


class ValidationError(TsGalerkinError, ValueError):
    """Invalid parameters or configuration.

    ``problems`` carries every violation found, not just the first one.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class InvalidGeometryError(ValidationError):
    pass


class InvalidTaggingError(ValidationError):
    pass


class InvalidTagError(ValidationError):
    pass


class DimensionError(ValidationError):
    pass


class PreconditionError(TsGalerkinError):
    pass


class NumericalError(TsGalerkinError):
    """Base for failures of the numerical machinery (CLI exit code 2)."""


class IterativeSolverError(NumericalError):
    def __init__(self, message, iterations=None, residual=None):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"{message} (iterations={iterations}, relative residual={residual})")


class PicardError(NumericalError):
    def __init__(self, message, iterations=None, residual=None):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"{message} (iterations={iterations}, last increment={residual})")
