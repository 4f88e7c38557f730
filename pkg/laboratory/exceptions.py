"""Error types shared by the numerical modules and the command-line surface."""


class RmtLabError(Exception):
    """Base class for every error raised by the laboratory."""

    exit_code = 3


class UsageError(RmtLabError):
    """Unknown experiment, unknown configuration key or inconsistent flags."""

    exit_code = 2


class ParameterError(RmtLabError, ValueError):
    """A numeric parameter is outside its admissible range."""


class DomainError(RmtLabError, ValueError):
    """The call is outside the setting in which a result is stated (e.g. beta != 2)."""


class InputError(RmtLabError, ValueError):
    """An input object is malformed or inconsistent with the parameters given."""


class ParseError(InputError):
    """A data file could not be parsed; carries the offending location when known."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        if row is not None or column is not None:
            message = f"{message} (row {row}, column {column})"
        super().__init__(message)


class NumericError(RmtLabError, ArithmeticError):
    """Non-convergence, step underflow or blow-up in a numerical kernel."""

    exit_code = 4

    def __init__(self, message, **diagnostics):
        self.diagnostics = diagnostics
        if diagnostics:
            details = ', '.join(f"{key}={value}" for key, value in diagnostics.items())
            message = f"{message} [{details}]"
        super().__init__(message)
