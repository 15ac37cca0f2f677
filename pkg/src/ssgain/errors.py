"""Exception hierarchy."""


class SsgainError(Exception):
    """Base class for all package errors."""


class ParameterDomainError(SsgainError, ValueError):
    """Kernel hyperparameters outside their admissible domain."""


class ArgumentError(SsgainError, ValueError):
    """Malformed arguments to an operation (e.g. reversed interval)."""


class ConvergenceError(SsgainError, RuntimeError):
    """A numerical procedure failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RankDeficiencyError(SsgainError, ArithmeticError):
    """The KKT matrix is singular beyond the pivoting tolerance."""

    def __init__(self, message, representers=()):
        super().__init__(message)
        self.representers = tuple(representers)


class UnsupportedInputError(SsgainError, TypeError):
    """Input signal type not supported for the requested domain."""


class InputFormatError(SsgainError, ValueError):
    """Malformed data file; carries row/column diagnostics."""

    def __init__(self, message, path=None, row=None, column=None):
        loc = []
        if path is not None:
            loc.append(str(path))
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(f"{': '.join([', '.join(loc), message]) if loc else message}")
        self.path, self.row, self.column = path, row, column


class MetricError(SsgainError, ValueError):
    """Metric undefined for the supplied arguments."""


class TuningError(SsgainError, RuntimeError):
    """Every hyperparameter candidate failed."""

    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)
