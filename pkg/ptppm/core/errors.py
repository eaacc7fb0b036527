"""
Error types raised by the engine.

Every error derives from PrivacyEngineError and may carry the timestep at
which it occurred. Invalid-argument errors also derive from ValueError.
Only the CLI turns these into exit codes.
"""
from dataclasses import dataclass
from typing import Optional


class PrivacyEngineError(Exception):
    """Base class for all engine errors."""

    def __init__(self, message: str = "", timestep: Optional[int] = None) -> None:
        super().__init__(message)
        self.message = message
        self.timestep = timestep

    def at(self, timestep: int) -> "PrivacyEngineError":
        """Attach a timestep (if none is set yet) and return self for re-raising."""
        if self.timestep is None:
            self.timestep = timestep
        return self

    def __str__(self) -> str:
        if self.timestep is None:
            return self.message
        return f"t={self.timestep}: {self.message}"


# ============================================================================
# GEOMETRY / GRAPH
# ============================================================================

class OutOfBounds(PrivacyEngineError, ValueError):
    """A coordinate or cell index lies outside the map."""


class UnknownVertex(PrivacyEngineError, KeyError):
    """A cell is not a vertex of the road graph."""

    def __str__(self) -> str:
        return PrivacyEngineError.__str__(self)


class NoSuchEdge(PrivacyEngineError, KeyError):
    """The directed edge is not in the road graph."""

    def __str__(self) -> str:
        return PrivacyEngineError.__str__(self)


# ============================================================================
# PROBABILITY
# ============================================================================

class EmptyInput(PrivacyEngineError, ValueError):
    """An operation received no usable data."""


class DimensionMismatch(PrivacyEngineError, ValueError):
    """Vector and matrix sizes disagree."""


class ZeroEvidence(PrivacyEngineError):
    """The released cell has zero likelihood under every prior-supported cell."""


class ZeroMass(PrivacyEngineError, ValueError):
    """A cell set carries no prior mass."""


# ============================================================================
# PROTECTION / MECHANISMS
# ============================================================================

class Infeasible(PrivacyEngineError):
    """No protection location set satisfies the inference-error condition."""


class DegeneratePLS(PrivacyEngineError, ValueError):
    """A protection location set has fewer than two cells."""


class MissingMechanism(PrivacyEngineError, KeyError):
    """A prior-supported cell has no release distribution."""

    def __str__(self) -> str:
        return PrivacyEngineError.__str__(self)


# ============================================================================
# BUDGET
# ============================================================================

class NonpositiveSensitivity(PrivacyEngineError, ValueError):
    """A sensitivity score is zero or negative."""


class ZeroDistance(PrivacyEngineError, ValueError):
    """A neighbor coincides with its sensitive cell."""


class EmptyWindow(PrivacyEngineError, ValueError):
    """A time window has t2 <= t1."""


# ============================================================================
# INGESTION / CONFIGURATION
# ============================================================================

class NoInBoundsFixes(PrivacyEngineError, ValueError):
    """None of the GPS fixes fall inside the map."""


class ConfigError(PrivacyEngineError, ValueError):
    """A configuration or input file is missing or invalid."""


@dataclass(frozen=True)
class ParseIssue:
    """A malformed input line (reported, never raised)."""
    line_no: int
    line: str
    reason: str
