"""
Enumeration classes for the engine.

All enum types used throughout the package for type safety and validation.
"""

from enum import Enum


class MechanismTag(str, Enum):
    """
    Release mechanisms.

    - PF: permute-and-flip over the protection location set
    - EXP: exponential mechanism over the protection location set
    - UNIFORM: uniform release over the delta-location set (no PLS stage)
    - IDENTITY: release the protected cell itself (diagnostics only)
    """
    PF = "pf"
    EXP = "exp"
    UNIFORM = "uniform"
    IDENTITY = "identity"

    @property
    def uses_pls(self) -> bool:
        """Whether the mechanism releases inside a protection location set."""
        return self in (MechanismTag.PF, MechanismTag.EXP)


class AttackMode(str, Enum):
    """
    Attacker inference strategies.

    - OPTIMAL: guess minimizing the posterior expected distance
    - BAYESIAN: guess the maximum-posterior cell
    """
    OPTIMAL = "optimal"
    BAYESIAN = "bayesian"


class Rotation(int, Enum):
    """Clockwise rotations of the Hilbert curve about the square's center."""
    R0 = 0
    R90 = 90
    R180 = 180
    R270 = 270

    @property
    def quarter_turns(self) -> int:
        return self.value // 90


class NeighborMode(str, Enum):
    """Which road-graph neighbors count as adjacent to a sensitive cell."""
    OUT = "out"
    UNION = "union"


class TraceFormat(str, Enum):
    """Supported raw GPS log formats."""
    TDRIVE = "tdrive"
    GEOLIFE = "geolife"


class InfeasiblePolicy(str, Enum):
    """
    What a pipeline run does when a step cannot build a PLS.

    - RAISE: abort with the timestep attached
    - SKIP: record a no-release step and continue
    """
    RAISE = "raise"
    SKIP = "skip"
