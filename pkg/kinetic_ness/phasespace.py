"""Discrete phase space, distribution storage and integral functionals."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt
import pandas as pd

from .constants import SNAPSHOT_HEADER
from .errors import InvalidFieldError, OutputError, ValidationError
from .helpers import write_table
from .model import FloatArray, WeightSpec, maxwellian_from_speed2, weight_from_speed2

IntArray = npt.NDArray[np.int64]


@dataclass(frozen=True, eq=False)
class PhaseSpaceGrid:
    """Uniform cell-centered grid of the unit box times a symmetric velocity box.

    Fields are stored with shape (Nx,)*d + (Nv,)*d: spatial axes first, then the
    velocity axes in the same order.
    """

    d: int
    nx: int
    nv: int
    v_max: float
    dx: float
    dv: float
    # nodes: velocity nodes along one axis, symmetric about 0, no node at 0
    nodes: FloatArray
    # cell_centers: (n_cells, d), row-major over the spatial axes
    cell_centers: FloatArray
    # speed2: |v|^2 on the velocity shape
    speed2: FloatArray
    # face_*: one entry per wall face, ordered by axis, then side (low, high),
    # then the transverse cell index
    face_axis: IntArray
    face_side: IntArray
    face_normal: FloatArray
    face_cell: IntArray
    face_center: FloatArray
    face_area: float

    @property
    def spatial_shape(self) -> tuple[int, ...]:
        """Return the shape of a per-cell array."""
        return (self.nx,) * self.d

    @property
    def velocity_shape(self) -> tuple[int, ...]:
        """Return the shape of a per-velocity array."""
        return (self.nv,) * self.d

    @property
    def shape(self) -> tuple[int, ...]:
        """Return the shape of a phase-space array."""
        return self.spatial_shape + self.velocity_shape

    @property
    def n_cells(self) -> int:
        """Return the number of spatial cells."""
        return int(self.nx**self.d)

    @property
    def n_faces(self) -> int:
        """Return the number of wall faces."""
        return int(self.face_axis.size)

    @property
    def cell_volume(self) -> float:
        """Return dx^d."""
        return float(self.dx**self.d)

    @property
    def velocity_volume(self) -> float:
        """Return dv^d."""
        return float(self.dv**self.d)

    @property
    def phase_volume(self) -> float:
        """Return dx^d dv^d."""
        return self.cell_volume * self.velocity_volume

    def mirror_index(self, j: int) -> int:
        """Return the index of the node mirrored through v = 0 along one axis."""
        return self.nv - 1 - j

    def axis_velocity(self, axis: int) -> FloatArray:
        """Return the velocity component along axis, broadcast to the velocity shape."""
        shape = [1] * self.d
        shape[axis] = self.nv
        return np.broadcast_to(self.nodes.reshape(shape), self.velocity_shape)

    def faces_of(self, axis: int, side: int) -> slice:
        """Return the contiguous face slice of one wall (side 0 = low, 1 = high)."""
        per_wall = self.nx ** (self.d - 1)
        start = (2 * axis + side) * per_wall
        return slice(start, start + per_wall)

    def spatial_broadcast(self, values: npt.ArrayLike) -> FloatArray:
        """Reshape a per-cell array (flat or spatial-shaped) to broadcast over velocities."""
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim == 0:
            arr = np.full(self.spatial_shape, float(arr))
        return arr.reshape(self.spatial_shape + (1,) * self.d)


def build_grid(d: int, nx: int, nv: int, v_max: float) -> PhaseSpaceGrid:
    """Build the discrete phase space of (0,1)^d x [-v_max, v_max]^d."""
    errors: list[str] = []
    if d not in (1, 2):
        errors.append(f"d must be 1 or 2, got {d}")
    if nx < 2:
        errors.append(f"Nx must be >= 2, got {nx}")
    if nv < 4 or nv % 2:
        errors.append(f"Nv must be an even number >= 4, got {nv}")
    if not v_max > 0:
        errors.append(f"v_max must be > 0, got {v_max}")
    if errors:
        raise ValidationError(errors)

    dx = 1.0 / nx
    dv = 2.0 * v_max / nv
    # build one half and mirror it so the grid is symmetric bit for bit
    half = (np.arange(nv // 2, dtype=np.float64) + 0.5) * dv
    nodes = np.concatenate((-half[::-1], half))
    centers_1d = (np.arange(nx, dtype=np.float64) + 0.5) * dx
    mesh = np.meshgrid(*([centers_1d] * d), indexing="ij")
    cell_centers = np.stack([m.ravel() for m in mesh], axis=1)
    vmesh = np.meshgrid(*([nodes] * d), indexing="ij")
    speed2 = sum(component * component for component in vmesh)

    axes, sides, normals, cells, centers = [], [], [], [], []
    transverse = range(nx) if d == 2 else range(1)
    for axis in range(d):
        for side in (0, 1):
            for t_idx in transverse:
                cell = [0] * d
                cell[axis] = 0 if side == 0 else nx - 1
                center = [0.0] * d
                center[axis] = float(side)
                if d == 2:
                    other = 1 - axis
                    cell[other] = t_idx
                    center[other] = centers_1d[t_idx]
                normal = [0.0] * d
                normal[axis] = -1.0 if side == 0 else 1.0
                axes.append(axis)
                sides.append(side)
                normals.append(normal)
                cells.append(cell)
                centers.append(center)

    return PhaseSpaceGrid(
        d=d,
        nx=nx,
        nv=nv,
        v_max=float(v_max),
        dx=dx,
        dv=dv,
        nodes=nodes,
        cell_centers=cell_centers,
        speed2=np.asarray(speed2, dtype=np.float64),
        face_axis=np.asarray(axes, dtype=np.int64),
        face_side=np.asarray(sides, dtype=np.int64),
        face_normal=np.asarray(normals, dtype=np.float64),
        face_cell=np.asarray(cells, dtype=np.int64),
        face_center=np.asarray(centers, dtype=np.float64),
        face_area=float(dx ** (d - 1)),
    )


@dataclass(eq=False)
class DistributionField:
    """Values f(x_i, v_j) on a grid at time t.

    A signed field (perturbation around a steady state) skips the
    nonnegativity invariant.
    """

    values: FloatArray
    grid: PhaseSpaceGrid
    t: float = 0.0
    signed: bool = False

    def __post_init__(self) -> None:
        """Check the invariants after init."""
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            msg = f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            raise InvalidFieldError(msg)
        if not np.isfinite(self.values).all():
            raise InvalidFieldError("field contains non-finite values")
        if not self.signed and self.values.min() < 0:
            msg = f"field has negative values (min {self.values.min():.3e})"
            raise InvalidFieldError(msg)

    def with_values(self, values: FloatArray, t: float | None = None) -> DistributionField:
        """Return a new field on the same grid."""
        return DistributionField(
            values=values, grid=self.grid, t=self.t if t is None else t, signed=self.signed
        )


@dataclass(eq=False)
class BoundaryFlux:
    """Trace mass fluxes |n.v| gamma f dv^d at a set of wall faces.

    values has shape (len(faces),) + velocity shape; outgoing data only lives on
    nodes with n.v > 0, incoming data only on nodes with n.v < 0.
    """

    values: FloatArray
    faces: IntArray
    outgoing: bool

    def total(self) -> FloatArray:
        """Return the total mass flux per face."""
        axes = tuple(range(1, self.values.ndim))
        return np.sum(self.values, axis=axes)


def _velocity_axes(grid: PhaseSpaceGrid) -> tuple[int, ...]:
    return tuple(range(grid.d, 2 * grid.d))


def mass_of(values: FloatArray, grid: PhaseSpaceGrid) -> float:
    """Return the midpoint-rule integral of raw values."""
    return float(np.sum(values) * grid.phase_volume)


def energy_of(values: FloatArray, grid: PhaseSpaceGrid) -> float:
    """Return (1/d) sum |v|^2 f dx^d dv^d for raw values."""
    return float(np.sum(values * grid.speed2) * grid.phase_volume / grid.d)


def density_of(values: FloatArray, grid: PhaseSpaceGrid) -> FloatArray:
    """Return the velocity marginal of raw values."""
    return np.sum(values, axis=_velocity_axes(grid)) * grid.velocity_volume


def cell_energy_of(values: FloatArray, grid: PhaseSpaceGrid) -> FloatArray:
    """Return the per-cell energy density (1/d) int |v|^2 f dv."""
    return np.sum(values * grid.speed2, axis=_velocity_axes(grid)) * grid.velocity_volume / grid.d


def norm_of(values: FloatArray, grid: PhaseSpaceGrid, w: WeightSpec, p: float = 2) -> float:
    """Return the discrete L^p norm of omega * values."""
    weighted = np.abs(values * weight_from_speed2(w, grid.speed2))
    if p == 1:
        return float(np.sum(weighted) * grid.phase_volume)
    if p == 2:
        return float(math.sqrt(np.sum(weighted * weighted) * grid.phase_volume))
    if p == math.inf:
        return float(weighted.max())
    msg = f"norm order must be 1, 2 or inf, got {p}"
    raise ValueError(msg)


def mass(f: DistributionField) -> float:
    """Return the total mass of a field."""
    return mass_of(f.values, f.grid)


def density(f: DistributionField) -> FloatArray:
    """Return the per-cell density rho_f."""
    return density_of(f.values, f.grid)


def energy_functional(f: DistributionField) -> float:
    """Return the total energy E_f = (1/d) int |v|^2 f."""
    return energy_of(f.values, f.grid)


def weighted_norm(f: DistributionField, w: WeightSpec, p: float = 2) -> float:
    """Return the weighted norm ||omega f||_{L^p}."""
    return norm_of(f.values, f.grid, w, p)


def weighted_distance(f: DistributionField, g: DistributionField, w: WeightSpec) -> float:
    """Return ||omega (f - g)||_{L^2}."""
    return norm_of(f.values - g.values, f.grid, w, 2)


def project_maxwellian(
    rho: npt.ArrayLike,
    temperature: npt.ArrayLike,
    grid: PhaseSpaceGrid,
    renormalize: bool = False,
    t: float = 0.0,
) -> DistributionField:
    """Return f[i, j] = rho[i] M_{T[i]}(v_j).

    With renormalize the discrete Maxwellian of every cell is divided by its
    discrete mass, so the density equals rho to roundoff.
    """
    rho_b = grid.spatial_broadcast(rho)
    temp_b = grid.spatial_broadcast(temperature)
    if np.any(rho_b < 0):
        raise ValidationError(["rho must be >= 0"])
    if not np.all(temp_b > 0):
        raise ValidationError(["temperature must be > 0"])
    shape = np.exp(-grid.speed2 / (2.0 * temp_b)) * (2.0 * np.pi * temp_b) ** (-0.5 * grid.d)
    if renormalize:
        axes = _velocity_axes(grid)
        shape = shape / (np.sum(shape, axis=axes, keepdims=True) * grid.velocity_volume)
    return DistributionField(values=rho_b * shape, grid=grid, t=t)


def discrete_maxwellian(temperature: float, grid: PhaseSpaceGrid) -> FloatArray:
    """Return the Maxwellian on the velocity nodes renormalized to discrete mass 1."""
    values = maxwellian_from_speed2(temperature, grid.speed2, grid.d)
    return values / (np.sum(values) * grid.velocity_volume)


def write_snapshot(path: Path | str, f: DistributionField) -> None:
    """Write a field as CSV (header row, value row, one row per spatial cell)."""
    grid = f.grid
    meta = pd.DataFrame(
        [[grid.d, grid.nx, grid.nv, grid.v_max, f.t, mass(f), energy_functional(f)]],
        columns=list(SNAPSHOT_HEADER),
    )
    write_table(meta, path)
    write_table(pd.DataFrame(f.values.reshape(grid.n_cells, -1)), path, header=False, append=True)


def read_snapshot(path: Path | str, signed: bool = False) -> DistributionField:
    """Read a field written by write_snapshot."""
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as handle:
            # the value rows are wider than the header, so the first two lines are parsed apart
            head = handle.readline() + handle.readline()
            meta = pd.read_csv(io.StringIO(head), float_precision="round_trip")
            rows = pd.read_csv(handle, header=None, float_precision="round_trip")
    except (OSError, ValueError) as err:
        msg = f"cannot read snapshot {path}: {err}"
        raise OutputError(msg, path=str(path)) from err
    if tuple(meta.columns) != SNAPSHOT_HEADER or len(meta) != 1:
        msg = f"{path} is not a snapshot file"
        raise OutputError(msg, path=str(path))
    record = meta.iloc[0]
    grid = build_grid(
        int(record["d"]), int(record["Nx"]), int(record["Nv"]), float(record["v_max"])
    )
    values = rows.to_numpy(dtype=np.float64)
    if values.size != math.prod(grid.shape):
        msg = f"{path} holds {values.size} values, expected {math.prod(grid.shape)}"
        raise OutputError(msg, path=str(path))
    return DistributionField(
        values=values.reshape(grid.shape), grid=grid, t=float(record["t"]), signed=signed
    )
