"""First-order upwind free transport -v.grad_x f with periodic or Maxwell walls."""

from __future__ import annotations

import numpy as np

from kinetic_ness.constants import CFL_SAFETY
from kinetic_ness.errors import CFLViolationError
from kinetic_ness.model import BoundarySpec, FloatArray
from kinetic_ness.phasespace import BoundaryFlux, DistributionField, PhaseSpaceGrid

from .boundary import WallData, apply_maxwell_boundary, collect_outgoing

# relative slack when comparing a step against the CFL bound
_CFL_SLACK = 1e-12


def cfl_max_dt(grid: PhaseSpaceGrid) -> float:
    """Return the largest stable transport step 0.9 dx / v_max."""
    return CFL_SAFETY * grid.dx / grid.v_max


def _wall_incoming(
    values: FloatArray, wall: WallData, axis: int
) -> tuple[FloatArray, FloatArray]:
    """Return the incoming trace fluxes of the low and high wall of one axis."""
    grid = wall.grid
    outgoing = collect_outgoing(values, wall)
    low, high = grid.faces_of(axis, 0), grid.faces_of(axis, 1)
    selected = np.r_[low, high]
    incoming = apply_maxwell_boundary(
        BoundaryFlux(values=outgoing.values[selected], faces=selected, outgoing=True), wall
    )
    per_wall = low.stop - low.start
    shape = np.take(values, 0, axis=axis).shape
    return (
        incoming.values[:per_wall].reshape(shape),
        incoming.values[per_wall:].reshape(shape),
    )


def _axis_fluxes(
    values: FloatArray, grid: PhaseSpaceGrid, wall: WallData | None, axis: int
) -> FloatArray:
    """Return the upwind face fluxes along one spatial axis (Nx + 1 faces, or Nx if periodic).

    For a periodic box entry i is the flux through the right face of cell i.
    """
    speed = grid.axis_velocity(axis)
    positive = np.clip(speed, 0.0, None)
    negative = np.clip(speed, None, 0.0)
    if wall is None:
        return positive * values + negative * np.roll(values, -1, axis=axis)

    first = np.take(values, [0], axis=axis)
    last = np.take(values, [grid.nx - 1], axis=axis)
    left = np.take(values, np.arange(grid.nx - 1), axis=axis)
    right = np.take(values, np.arange(1, grid.nx), axis=axis)
    interior = positive * left + negative * right
    in_low, in_high = _wall_incoming(values, wall, axis)
    scale = 1.0 / grid.velocity_volume
    low_face = np.expand_dims(in_low, axis) * scale + negative * first
    high_face = positive * last - np.expand_dims(in_high, axis) * scale
    return np.concatenate((low_face, interior, high_face), axis=axis)


def _sweep_divergence(
    values: FloatArray, grid: PhaseSpaceGrid, wall: WallData | None, axis: int
) -> FloatArray:
    """Return the discrete divergence of the face fluxes along one axis."""
    fluxes = _axis_fluxes(values, grid, wall, axis)
    if wall is None:
        return (fluxes - np.roll(fluxes, 1, axis=axis)) / grid.dx
    return np.diff(fluxes, axis=axis) / grid.dx


def transport_values(
    values: FloatArray, grid: PhaseSpaceGrid, dt: float, wall: WallData | None = None
) -> FloatArray:
    """Advance raw values by dt (periodic when wall is None).

    In d = 2 the update is split into one sweep per spatial axis; every sweep
    is positivity preserving under the CFL bound.
    """
    limit = cfl_max_dt(grid)
    if dt > limit * (1.0 + _CFL_SLACK):
        msg = f"time step {dt:.6e} exceeds the CFL bound {limit:.6e}"
        raise CFLViolationError(msg)
    result = values
    for axis in range(grid.d):
        result = result - dt * _sweep_divergence(result, grid, wall, axis)
    return result


def resolve_walls(grid: PhaseSpaceGrid, boundary: BoundarySpec) -> WallData | None:
    """Return the resolved wall data, or None for a periodic box."""
    if not boundary.mode.has_walls:
        return None
    return WallData.from_spec(grid, boundary)


def transport_step(f: DistributionField, dt: float, boundary: BoundarySpec) -> DistributionField:
    """Return the field advected over dt with the given boundary treatment."""
    wall = resolve_walls(f.grid, boundary)
    values = transport_values(f.values, f.grid, dt, wall)
    return f.with_values(values, t=f.t + dt)
