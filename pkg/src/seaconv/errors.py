"""Exception types shared across the package."""
from __future__ import annotations


class SeaconvError(Exception):
    """Base class for all package-specific errors."""


class ParseError(SeaconvError):
    """DSL syntax or resolution error, carrying the byte offset in the source."""

    def __init__(self, message: str, pos: int, src: str | None = None):
        self.pos = pos
        self.src = src
        super().__init__(f"{message} (at offset {pos})")


class EvalDomainError(SeaconvError):
    """Evaluation left the domain of a primitive (log/sqrt of nonpositive,
    division by zero, non-finite result).  Carries the offending subtree."""

    def __init__(self, message: str, expr=None):
        self.expr = expr
        if expr is not None:
            message = f"{message} in {expr!r}"
        super().__init__(message)


class QuadratureError(SeaconvError):
    """Adaptive quadrature failed to converge or hit a bad integrand."""


class HypothesisError(SeaconvError):
    """A family builder's mathematical hypothesis failed a numeric probe."""


class GuardError(SeaconvError):
    """A requested evaluation point violates a solution's domain guard."""


class ConfigError(SeaconvError):
    """Bad configuration or descriptor content."""
