"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""


class DataFormatError(ToolkitError):
    """A file does not conform to one of the text formats."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        super().__init__(prefix + message)


class ValidationError(ToolkitError):
    """Inputs violate an operation's preconditions or a type invariant."""


class NumericalError(ToolkitError):
    """A numerical computation failed (non-finite values, singular matrix, ...)."""
