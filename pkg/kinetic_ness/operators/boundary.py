"""Maxwell reflection at the walls of the unit box."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from kinetic_ness.errors import BoundaryDataError
from kinetic_ness.model import BoundarySpec, FloatArray, maxwellian_from_speed2
from kinetic_ness.phasespace import BoundaryFlux, PhaseSpaceGrid

LOGGER = logging.getLogger(__name__)


@dataclass(eq=False)
class WallData:
    """Boundary data resolved per wall face.

    The wall temperature is only evaluated (and required) where the
    accommodation coefficient is positive; elsewhere it is nan.
    """

    grid: PhaseSpaceGrid
    iota: FloatArray
    theta: FloatArray
    # normal_velocity: n_x . v per face, shape (n_faces,) + velocity shape
    normal_velocity: FloatArray
    # kernel: wall Maxwellian flux |n.v| M_Theta dv^d on incoming nodes,
    # renormalized to total 1 per face (zero where iota = 0)
    kernel: FloatArray
    # raw_kernel_flux: discrete incoming flux of the analytic kernel before renormalization
    raw_kernel_flux: FloatArray

    @classmethod
    def from_spec(cls, grid: PhaseSpaceGrid, boundary: BoundarySpec) -> WallData:
        """Resolve a boundary specification on the wall faces of a grid."""
        iota = boundary.accommodation.evaluate(grid.face_center)
        if np.any(iota < 0) or np.any(iota > 1):
            msg = "accommodation values outside [0, 1]"
            raise BoundaryDataError(msg)
        theta = np.full(grid.n_faces, math.nan)
        diffusive = iota > 0
        if np.any(diffusive):
            theta_all = boundary.wall_temperature.evaluate(grid.face_center)
            theta[diffusive] = theta_all[diffusive]
            bad = diffusive & ~(np.isfinite(theta) & (theta > 0))
            if np.any(bad):
                faces = np.flatnonzero(bad).tolist()
                msg = f"wall temperature undefined where accommodation > 0 (faces {faces})"
                raise BoundaryDataError(msg)

        expand = (slice(None),) + (None,) * grid.d
        normal_velocity = np.zeros((grid.n_faces,) + grid.velocity_shape)
        for axis in range(grid.d):
            normal_velocity += grid.face_normal[:, axis][expand] * grid.axis_velocity(axis)

        kernel = np.zeros_like(normal_velocity)
        raw_flux = np.zeros(grid.n_faces)
        incoming = normal_velocity < 0
        for face in np.flatnonzero(diffusive):
            speed_in = np.where(incoming[face], -normal_velocity[face], 0.0)
            flux = math.sqrt(2.0 * math.pi / theta[face]) * maxwellian_from_speed2(
                float(theta[face]), grid.speed2, grid.d
            )
            values = speed_in * flux * grid.velocity_volume
            raw_flux[face] = float(np.sum(values))
            kernel[face] = values / raw_flux[face]
        LOGGER.debug(
            "wall data: %d faces, %d diffusive", grid.n_faces, int(np.count_nonzero(diffusive))
        )
        return cls(
            grid=grid,
            iota=iota,
            theta=theta,
            normal_velocity=normal_velocity,
            kernel=kernel,
            raw_kernel_flux=raw_flux,
        )


def collect_outgoing(values: FloatArray, wall: WallData) -> BoundaryFlux:
    """Return the outgoing trace flux (n.v)_+ f dv^d of every wall face."""
    grid = wall.grid
    traces = values[tuple(grid.face_cell.T)]
    flux = np.clip(wall.normal_velocity, 0.0, None) * traces * grid.velocity_volume
    return BoundaryFlux(values=flux, faces=np.arange(grid.n_faces), outgoing=True)


def _mirror(flux: BoundaryFlux, wall: WallData) -> FloatArray:
    """Return the specular image V_x v of the flux data (index permutation)."""
    axes = wall.grid.face_axis[flux.faces]
    mirrored = np.empty_like(flux.values)
    for axis in np.unique(axes):
        selected = axes == axis
        mirrored[selected] = np.flip(flux.values[selected], axis=1 + int(axis))
    return mirrored


def apply_maxwell_boundary(outgoing: BoundaryFlux, wall: WallData) -> BoundaryFlux:
    """Return the incoming flux (1 - iota) S gamma_+ f + iota D gamma_+ f.

    The specular part mirrors the outgoing data; the diffusive part re-emits the
    total outgoing mass flux of the face with the renormalized wall kernel, so the
    incoming mass flux equals the outgoing one at every face.
    """
    expand = (slice(None),) + (None,) * wall.grid.d
    iota = wall.iota[outgoing.faces][expand]
    specular = _mirror(outgoing, wall)
    total = outgoing.total()[expand]
    incoming = (1.0 - iota) * specular + iota * total * wall.kernel[outgoing.faces]
    return BoundaryFlux(values=incoming, faces=outgoing.faces, outgoing=False)


def boundary_energy_flux(outgoing: BoundaryFlux, wall: WallData) -> float:
    """Return the wall term int iota |v|^2 gamma_+ f (-|v|^2 + c Theta^{3/2}) (n.v)_+.

    With c = ((d + 1)/2) sqrt(2/pi). Positive values mean the walls currently
    pump energy into the gas.
    """
    grid = wall.grid
    faces = outgoing.faces
    iota = wall.iota[faces]
    if not np.any(iota > 0):
        return 0.0
    expand = (slice(None),) + (None,) * grid.d
    coeff = 0.5 * (grid.d + 1) * math.sqrt(2.0 / math.pi)
    theta = np.where(iota > 0, wall.theta[faces], 0.0)
    bracket = -grid.speed2 + coeff * (theta**1.5)[expand]
    integrand = iota[expand] * grid.speed2 * bracket * outgoing.values
    return float(np.sum(integrand) * grid.face_area)


def wall_energy_exchange(outgoing: BoundaryFlux, wall: WallData) -> float:
    """Return the net energy rate (1/d) int |v|^2 (gamma_- f - gamma_+ f) |n.v| at the walls."""
    grid = wall.grid
    incoming = apply_maxwell_boundary(outgoing, wall)
    net = np.sum((incoming.values - outgoing.values) * grid.speed2)
    return float(net * grid.face_area / grid.d)
