"""Exception hierarchy shared by all splitlab modules."""

__all__ = [
    "SplitlabError", "InvalidArgumentError", "EvaluationError", "BoundaryError",
    "NoConvergenceError", "CapabilityError", "IntegrationError", "ExprParseError",
    "ExprNameError", "ConfigError", "CompatibilityError", "CacheError",
    "InsufficientDataError", "OutputError",
]


class SplitlabError(Exception):
    """Base class for every error raised by splitlab."""


class InvalidArgumentError(SplitlabError, ValueError):
    pass


class EvaluationError(SplitlabError, ArithmeticError):
    """A user or scenario function produced a non-finite value.

    ``where`` carries the node coordinates or the time at which the
    evaluation failed, when known.
    """

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class BoundaryError(SplitlabError):
    """A stencil needed a boundary value that was not supplied."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class NoConvergenceError(SplitlabError):
    pass


class CapabilityError(SplitlabError):
    pass


class IntegrationError(SplitlabError):
    """A splitting step failed; ``t`` is the start of the failing step."""

    def __init__(self, message, t=None, stage=None):
        super().__init__(message)
        self.t = t
        self.stage = stage


class ExprParseError(SplitlabError):
    def __init__(self, message, offset, expected=()):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.expected = frozenset(expected)


class ExprNameError(SplitlabError, NameError):
    def __init__(self, message, name):
        super().__init__(message)
        self.name = name


class ConfigError(SplitlabError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class CompatibilityError(ConfigError):
    def __init__(self, message, mismatch):
        super().__init__(message, field="u0")
        self.mismatch = mismatch


class CacheError(SplitlabError):
    pass


class InsufficientDataError(SplitlabError):
    pass


class OutputError(SplitlabError, OSError):
    pass
