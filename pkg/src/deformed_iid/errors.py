"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class DeformedIIDError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDimension(DeformedIIDError, ValueError):
    pass


class InvalidSpikeStrength(DeformedIIDError, ValueError):
    pass


class EigensolverFailure(DeformedIIDError, RuntimeError):
    """The dense eigensolver did not converge.

    ``diagnostics`` carries whatever partial information was available
    (matrix shape, norm estimate, the underlying LAPACK message).
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class UndefinedGap(DeformedIIDError, ValueError):
    pass


class RootFindingFailure(DeformedIIDError, RuntimeError):
    pass


class InvalidRegion(DeformedIIDError, ValueError):
    pass


class QueryBudgetExceeded(DeformedIIDError, RuntimeError):
    pass


class InvalidQuery(DeformedIIDError, ValueError):
    pass


class NonOrthogonalQuery(DeformedIIDError, ValueError):
    pass


class InvalidDelta(DeformedIIDError, ValueError):
    pass


class DegenerateIterate(DeformedIIDError, ArithmeticError):
    pass


class SingularEigenbasis(DeformedIIDError, ValueError):
    pass


class BoundDegenerate(DeformedIIDError, ValueError):
    pass


class BoundInapplicable(DeformedIIDError, ValueError):
    pass


class UndefinedMoment(DeformedIIDError, ValueError):
    pass


class SubcriticalSpike(DeformedIIDError, ValueError):
    pass


class ConfigError(DeformedIIDError, ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class IOErrorWithPath(DeformedIIDError, OSError):
    def __init__(self, message: str, path: str):
        super().__init__(f"{path}: {message}")
        self.path = path
