"""Exception hierarchy shared by every module of the package."""


class SloresError(Exception):
    """Base class for all errors raised by this package."""


class DataError(SloresError):
    """Malformed or unusable input data."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class GeometryError(SloresError):
    """The reference dual point does not define a valid screening geometry."""


class DegenerateProblemError(SloresError):
    """The problem has no nontrivial regularization path (lambda_max == 0)."""


class BoundError(SloresError):
    """Internal inconsistency while evaluating the closed-form feature bound."""


class ConvergenceError(SloresError):
    """The solver hit its iteration cap before certifying the requested gap."""

    def __init__(self, message, lam=None, gap=None):
        super().__init__(message)
        self.lam = lam
        self.gap = gap


class ConfigError(SloresError):
    """Invalid path or CLI configuration."""


class SafetyViolation(SloresError):
    """A safe rule discarded a feature that is active in the reference solution."""
