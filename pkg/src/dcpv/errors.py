"""Exception types shared across the package."""


class DcpvError(Exception):
    """Base class for all package errors."""


class ParameterError(DcpvError, ValueError):
    """A parameter violates its documented precondition."""


class DimensionError(ParameterError):
    """Array or vector dimensions are incompatible."""


class DegenerateInputError(DcpvError, ValueError):
    """Input carries no usable information (constant vector or image)."""


class SecurityPolicyError(DcpvError):
    """Requested parameters are refused by the security policy."""


class FormatError(DcpvError, ValueError):
    """A file or text blob failed to parse or validate.

    ``line`` is the 1-based line number of the offending line when known.
    """

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = []
        if source is not None:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{':'.join(where)}: {message}"
        super().__init__(message)


class RecordNotFoundError(DcpvError, KeyError):
    """No enrollment record exists for the requested subject."""

    def __str__(self):
        return str(self.args[0]) if self.args else "record not found"
