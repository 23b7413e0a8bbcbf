"""All enums used by the kinetic simulator models."""

from __future__ import annotations

from enum import StrEnum


class BoundaryMode(StrEnum):
    """Enum for the spatial boundary treatment."""

    MAXWELL = "maxwell"
    PERIODIC = "periodic"

    @property
    def has_walls(self) -> bool:
        """Return if the domain is closed by reflecting walls."""
        return self == BoundaryMode.MAXWELL


class ProfileKind(StrEnum):
    """Enum with the supported shapes of a spatial profile."""

    CONSTANT = "constant"
    LINEAR = "linear"  # linear ramp low -> high along one axis
    TWO_PLATEAU = "two_plateau"  # low below split, high above it
    TABLE = "table"  # explicit per-cell (or per-face) values


class EnergyMode(StrEnum):
    """Enum for the way the diffusivity of the collision operator is obtained."""

    # frozen: a fixed diffusivity profile (linear equation)
    FROZEN = "frozen"
    # self_consistent: alpha * E_f + (1 - alpha) * tau, rebuilt every step
    SELF_CONSISTENT = "self_consistent"


class FitStatus(StrEnum):
    """Enum with the outcome of an exponential decay fit."""

    OK = "ok"
    NO_DECAY_SIGNAL = "no_decay_signal"
    WINDOW_TOO_SHORT = "window_too_short"


class RegimeFlag(StrEnum):
    """Enum that tells if a nonlinear run is covered by the existence theory."""

    WITHIN_PROVEN_REGIME = "within proven regime"
    OUTSIDE_PROVEN_REGIME = "outside proven regime"


class StabilityMode(StrEnum):
    """Enum for the dynamics used by the stability experiment."""

    NONLINEAR = "nonlinear"  # full self-consistent evolution of f
    LINEARIZED = "linearized"  # signed perturbation around the steady state


class Command(StrEnum):
    """Enum with the experiment commands of the command line interface."""

    VALIDATE = "validate"
    SIMULATE = "simulate"
    LINEAR_NESS = "linear-ness"
    NESS = "ness"
    STABILITY = "stability"
    ORACLE_CHECK = "oracle-check"

    @property
    def writes_outputs(self) -> bool:
        """Return if the command produces result files."""
        return self != Command.VALIDATE


class RunStatus(StrEnum):
    """Enum for the status stored in a run summary."""

    OK = "ok"
    ERROR = "error"
