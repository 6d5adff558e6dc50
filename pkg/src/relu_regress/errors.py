"""Exception types raised across the package."""


class ReluRegressError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(ReluRegressError, ValueError):
    pass


class InvalidSpec(ReluRegressError, ValueError):
    pass


class ConfigError(ReluRegressError, ValueError):
    pass


class ParseError(ReluRegressError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyTrace(ReluRegressError, ValueError):
    pass


class EmptyRegion(ReluRegressError, ValueError):
    pass


class ZeroDirection(ReluRegressError, ValueError):
    pass


class SizeOverflow(ReluRegressError, ValueError):
    pass


class DegreeOverflow(ReluRegressError, ValueError):
    pass


class NoConvergence(ReluRegressError, RuntimeError):
    pass
