"""Shared fixtures: small grids and parameter sets used across the test modules."""

from __future__ import annotations

import math

import pytest

from kinetic_ness.enums import BoundaryMode
from kinetic_ness.integrator import IntegratorConfig
from kinetic_ness.model import (
    BoundarySpec,
    ModelParams,
    ProfileSpec,
    RegionSpec,
    ThermostatSpec,
)
from kinetic_ness.phasespace import PhaseSpaceGrid, build_grid

# homogeneous validation case: tau = 1 everywhere, one thermostat (eta = 2, T = 3)
HOMOGENEOUS_ETA = 2.0
HOMOGENEOUS_TEMPERATURE = 3.0


def homogeneous_params(alpha: float = 0.0) -> ModelParams:
    """Return the periodic box with a full-domain thermostat."""
    return ModelParams(
        dimension=1,
        alpha=alpha,
        tau=ProfileSpec.constant(1.0),
        thermostats=[
            ThermostatSpec(eta=HOMOGENEOUS_ETA, temperature=HOMOGENEOUS_TEMPERATURE),
        ],
        boundary=BoundarySpec(mode=BoundaryMode.PERIODIC),
    )


def walled_params(alpha: float = 0.0, iota: float = 0.5) -> ModelParams:
    """Return a bounded box with Maxwell walls and two competing thermostats."""
    return ModelParams(
        dimension=1,
        alpha=alpha,
        tau=ProfileSpec.constant(1.0),
        thermostats=[
            ThermostatSpec(
                eta=1.0, temperature=2.0, region=RegionSpec(lower=[0.0], upper=[0.3])
            ),
            ThermostatSpec(
                eta=0.5, temperature=0.5, region=RegionSpec(lower=[0.7], upper=[1.0])
            ),
        ],
        boundary=BoundarySpec(
            mode=BoundaryMode.MAXWELL,
            accommodation=ProfileSpec.constant(iota),
            wall_temperature=ProfileSpec.constant(1.5),
        ),
    )


@pytest.fixture
def homogeneous_grid() -> PhaseSpaceGrid:
    """Return a two-cell grid resolving the hottest temperature of the homogeneous case."""
    return build_grid(1, 2, 64, 8.0 * math.sqrt(HOMOGENEOUS_TEMPERATURE))


@pytest.fixture
def homogeneous_config() -> IntegratorConfig:
    """Return integrator settings accurate enough for 1% energy checks."""
    return IntegratorConfig(dt=0.01, steady_tol=1e-8)


@pytest.fixture
def walled_grid() -> PhaseSpaceGrid:
    """Return a coarse bounded-domain grid."""
    return build_grid(1, 8, 32, 8.0 * math.sqrt(2.0))
