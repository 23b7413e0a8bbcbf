"""Discrete collision, thermostat, transport and wall operators."""

from __future__ import annotations

from .boundary import (
    WallData,
    apply_maxwell_boundary,
    boundary_energy_flux,
    collect_outgoing,
    wall_energy_exchange,
)
from .collision import (
    CollisionWorkspace,
    bernoulli,
    chang_cooper_delta,
    fp_apply,
    fp_apply_values,
    velocity_laplacian,
)
from .thermostat import ThermostatRegion, ThermostatWorkspace, bgk_apply
from .transport import (
    cfl_max_dt,
    resolve_walls,
    transport_step,
    transport_values,
)

__all__ = (
    "CollisionWorkspace",
    "ThermostatRegion",
    "ThermostatWorkspace",
    "WallData",
    "apply_maxwell_boundary",
    "bernoulli",
    "bgk_apply",
    "boundary_energy_flux",
    "cfl_max_dt",
    "chang_cooper_delta",
    "collect_outgoing",
    "fp_apply",
    "fp_apply_values",
    "resolve_walls",
    "transport_step",
    "transport_values",
    "velocity_laplacian",
    "wall_energy_exchange",
)
