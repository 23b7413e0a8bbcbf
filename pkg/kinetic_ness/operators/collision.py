"""Chang-Cooper discretization of the Fokker-Planck operator C_Lambda."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from kinetic_ness.model import DiffusivityProfile, FloatArray
from kinetic_ness.phasespace import DistributionField, PhaseSpaceGrid

LOGGER = logging.getLogger(__name__)

# below this |w| the series expansion of the Bernoulli function is used
_SERIES_CUTOFF = 1e-6


def bernoulli(w: FloatArray) -> FloatArray:
    """Return B(w) = w / (exp(w) - 1), with B(0) = 1."""
    w = np.asarray(w, dtype=np.float64)
    small = np.abs(w) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, w)
    with np.errstate(over="ignore"):
        value = safe / np.expm1(safe)
    return np.where(small, 1.0 - 0.5 * w + w * w / 12.0, value)


def chang_cooper_delta(w: FloatArray) -> FloatArray:
    """Return the interpolation weight delta = 1/w - 1/(exp(w) - 1), delta(0) = 1/2."""
    w = np.asarray(w, dtype=np.float64)
    small = np.abs(w) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, w)
    with np.errstate(over="ignore"):
        value = 1.0 / safe - 1.0 / np.expm1(safe)
    return np.where(small, 0.5 - w / 12.0, value)


def _face_velocities(grid: PhaseSpaceGrid) -> FloatArray:
    return 0.5 * (grid.nodes[:-1] + grid.nodes[1:])


def _face_coefficients(
    grid: PhaseSpaceGrid, lambda_b: FloatArray
) -> tuple[FloatArray, FloatArray]:
    """Return (up, down) with F_{j+1/2} = up * f_{j+1} - down * f_j.

    lambda_b broadcasts against the face axis (last axis).
    """
    w = _face_velocities(grid) * grid.dv / lambda_b
    scale = lambda_b / grid.dv
    return scale * bernoulli(-w), scale * bernoulli(w)


def _apply_axis(
    values: FloatArray, grid: PhaseSpaceGrid, lambda_values: FloatArray, axis: int
) -> FloatArray:
    """Return the flux-form Chang-Cooper operator along one velocity axis."""
    vaxis = grid.d + axis
    moved = np.moveaxis(values, vaxis, -1)
    lambda_b = lambda_values.reshape(grid.spatial_shape + (1,) * grid.d)
    up, down = _face_coefficients(grid, lambda_b)
    flux = up * moved[..., 1:] - down * moved[..., :-1]
    pad = [(0, 0)] * (flux.ndim - 1) + [(1, 1)]
    result = np.diff(np.pad(flux, pad), axis=-1) / grid.dv
    return np.moveaxis(result, -1, vaxis)


def fp_apply_values(
    values: FloatArray, grid: PhaseSpaceGrid, lambda_values: FloatArray
) -> FloatArray:
    """Return C_Lambda f for raw values; lambda_values is per cell."""
    lambda_values = np.asarray(lambda_values, dtype=np.float64).reshape(grid.spatial_shape)
    result = np.zeros_like(values)
    for axis in range(grid.d):
        result += _apply_axis(values, grid, lambda_values, axis)
    return result


def fp_apply(f: DistributionField, diffusivity: DiffusivityProfile) -> FloatArray:
    """Return C_Lambda f = Lambda Delta_v f + div_v(v f) in conservative flux form."""
    return fp_apply_values(f.values, f.grid, diffusivity.values)


def velocity_laplacian(values: FloatArray, grid: PhaseSpaceGrid) -> FloatArray:
    """Return the conservative discrete Delta_v with zero flux at +-v_max."""
    result = np.zeros_like(values)
    for axis in range(grid.d):
        vaxis = grid.d + axis
        flux = np.diff(values, axis=vaxis) / grid.dv
        pad = [(0, 0)] * values.ndim
        pad[vaxis] = (1, 1)
        result += np.diff(np.pad(flux, pad), axis=vaxis) / grid.dv
    return result


@dataclass(eq=False)
class CollisionWorkspace:
    """Banded systems (I - dt C_Lambda) for the implicit collision update.

    One tridiagonal system per velocity axis covers every cell: the blocks of
    consecutive cells are decoupled because the face flux at +-v_max is zero.
    """

    grid: PhaseSpaceGrid
    lambda_values: FloatArray
    dt: float
    # bands[axis]: LAPACK banded storage (3, n) for that sweep direction
    bands: list[FloatArray]
    # weights: Chang-Cooper delta per cell and velocity face, in [0, 1]
    weights: FloatArray

    @classmethod
    def build(
        cls, grid: PhaseSpaceGrid, diffusivity: DiffusivityProfile, dt: float
    ) -> CollisionWorkspace:
        """Assemble the banded systems for a diffusivity profile and a time step."""
        lambda_values = np.asarray(diffusivity.values, dtype=np.float64).reshape(-1)
        lambda_rows = np.repeat(lambda_values, grid.nv ** (grid.d - 1))[:, None]
        up, down = _face_coefficients(grid, lambda_rows)
        rows = lambda_rows.shape[0]
        inv_dv = 1.0 / grid.dv
        # coefficient of f_{j+1} and f_{j-1} in row j, zero across the velocity edges
        upper = np.zeros((rows, grid.nv))
        lower = np.zeros((rows, grid.nv))
        diag = np.zeros((rows, grid.nv))
        upper[:, :-1] = up * inv_dv
        lower[:, 1:] = down * inv_dv
        diag[:, :-1] -= down * inv_dv
        diag[:, 1:] -= up * inv_dv
        band = np.zeros((3, rows * grid.nv))
        band[0, 1:] = -dt * upper.ravel()[:-1]
        band[1, :] = 1.0 - dt * diag.ravel()
        band[2, :-1] = -dt * lower.ravel()[1:]
        w = _face_velocities(grid) * grid.dv / lambda_values[:, None]
        weights = chang_cooper_delta(w)
        LOGGER.debug(
            "collision workspace: %d systems of size %d, dt=%.3e", rows, grid.nv, dt
        )
        # the coefficients are identical along every sweep direction
        return cls(
            grid=grid,
            lambda_values=lambda_values,
            dt=dt,
            bands=[band] * grid.d,
            weights=weights,
        )

    def matches(self, diffusivity: DiffusivityProfile, dt: float) -> bool:
        """Return if the workspace is valid for this diffusivity and step."""
        return dt == self.dt and np.array_equal(
            np.asarray(diffusivity.values).reshape(-1), self.lambda_values
        )

    def solve(self, values: FloatArray) -> FloatArray:
        """Return (I - dt C_Lambda)^-1 values; one implicit sweep per velocity axis."""
        grid = self.grid
        result = values
        for axis, band in enumerate(self.bands):
            vaxis = grid.d + axis
            moved = np.ascontiguousarray(np.moveaxis(result, vaxis, -1))
            solved = solve_banded((1, 1), band, moved.reshape(-1), check_finite=False)
            result = np.moveaxis(solved.reshape(moved.shape), -1, vaxis)
        return np.ascontiguousarray(result)
