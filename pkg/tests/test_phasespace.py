"""Tests for the phase-space grid, field storage and integral functionals."""

from pathlib import Path

import numpy as np
import pytest

from kinetic_ness.errors import InvalidFieldError, OutputError, ValidationError
from kinetic_ness.model import WeightSpec
from kinetic_ness.phasespace import (
    DistributionField,
    build_grid,
    density,
    discrete_maxwellian,
    energy_functional,
    mass,
    project_maxwellian,
    read_snapshot,
    weighted_distance,
    weighted_norm,
    write_snapshot,
)


def test_build_grid_nodes() -> None:
    """Test the velocity nodes are cell centered and symmetric."""
    grid = build_grid(1, 4, 4, 2.0)
    assert grid.nodes.tolist() == [-1.5, -0.5, 0.5, 1.5]
    assert grid.dx == 0.25
    assert grid.dv == 1.0
    assert grid.cell_centers[:, 0].tolist() == [0.125, 0.375, 0.625, 0.875]
    assert grid.mirror_index(0) == 3
    assert np.array_equal(grid.nodes, -grid.nodes[::-1])


def test_build_grid_faces() -> None:
    """Test wall face bookkeeping in one and two dimensions."""
    grid_1d = build_grid(1, 8, 16, 4.0)
    assert grid_1d.n_faces == 2
    assert grid_1d.face_normal[:, 0].tolist() == [-1.0, 1.0]
    grid_2d = build_grid(2, 8, 16, 4.0)
    assert grid_2d.n_faces == 32
    assert grid_2d.shape == (8, 8, 16, 16)
    assert grid_2d.face_area == pytest.approx(0.125)
    high_y = grid_2d.faces_of(1, 1)
    assert np.all(grid_2d.face_normal[high_y] == [0.0, 1.0])
    assert np.all(grid_2d.face_cell[high_y][:, 1] == 7)


@pytest.mark.parametrize(
    ("d", "nx", "nv", "v_max"),
    [(3, 4, 8, 1.0), (1, 1, 8, 1.0), (1, 4, 7, 1.0), (1, 4, 2, 1.0), (1, 4, 8, 0.0)],
)
def test_build_grid_rejects_bad_sizes(d: int, nx: int, nv: int, v_max: float) -> None:
    """Test invalid grid parameters are rejected."""
    with pytest.raises(ValidationError):
        build_grid(d, nx, nv, v_max)


def test_field_invariants() -> None:
    """Test shape, finiteness and sign checks of a field."""
    grid = build_grid(1, 4, 8, 4.0)
    with pytest.raises(InvalidFieldError):
        DistributionField(values=np.zeros((4, 4)), grid=grid)
    bad = np.ones(grid.shape)
    bad[0, 0] = np.nan
    with pytest.raises(InvalidFieldError):
        DistributionField(values=bad, grid=grid)
    negative = -np.ones(grid.shape)
    with pytest.raises(InvalidFieldError):
        DistributionField(values=negative, grid=grid)
    assert DistributionField(values=negative, grid=grid, signed=True).signed


def test_project_maxwellian_moments() -> None:
    """Test the renormalized projection reproduces density and temperature."""
    grid = build_grid(1, 4, 64, 8.0)
    rho = np.array([0.5, 1.0, 1.5, 1.0])
    f = project_maxwellian(rho, 1.0, grid, renormalize=True)
    assert density(f) == pytest.approx(rho, rel=1e-14)
    assert mass(f) == pytest.approx(1.0, rel=1e-14)
    assert energy_functional(f) == pytest.approx(1.0, rel=1e-10)
    with pytest.raises(ValidationError):
        project_maxwellian(1.0, 0.0, grid)


def test_energy_functional_two_dimensions() -> None:
    """Test E_f = (1/d) int |v|^2 f for a 2-d Maxwellian."""
    grid = build_grid(2, 4, 48, 12.0)
    f = project_maxwellian(1.0, 2.0, grid, renormalize=True)
    assert mass(f) == pytest.approx(1.0, rel=1e-13)
    assert energy_functional(f) == pytest.approx(2.0, rel=1e-8)


def test_discrete_maxwellian_mass() -> None:
    """Test the discrete Maxwellian has mass 1 on the velocity grid."""
    grid = build_grid(1, 2, 8, 3.0)
    values = discrete_maxwellian(1.0, grid)
    assert float(np.sum(values)) * grid.dv == pytest.approx(1.0, rel=1e-14)


def test_weighted_norms() -> None:
    """Test the weighted norms and distance."""
    grid = build_grid(1, 2, 16, 4.0)
    f = project_maxwellian(1.0, 1.0, grid, renormalize=True)
    g = f.with_values(2.0 * f.values)
    weight = WeightSpec.monitoring(1)
    assert weighted_norm(f, weight, 1) > mass(f)
    assert weighted_distance(f, g, weight) == pytest.approx(weighted_norm(f, weight))
    assert weighted_distance(f, f, weight) == 0.0
    assert weighted_norm(g, weight, np.inf) == pytest.approx(2.0 * weighted_norm(f, weight, np.inf))
    with pytest.raises(ValueError, match="norm order"):
        weighted_norm(f, weight, 3)


def test_snapshot_round_trip(tmp_path: Path) -> None:
    """Test a snapshot reads back bit for bit."""
    grid = build_grid(2, 3, 6, 2.5)
    rng = np.random.default_rng(7)
    values = rng.random(grid.shape)
    values[..., 0] = 0.0
    f = DistributionField(values=values, grid=grid, t=0.375)
    path = tmp_path / "snapshot.csv"
    write_snapshot(path, f)
    lines = path.read_text().splitlines()
    assert lines[0] == "d,Nx,Nv,v_max,t,mass,energy"
    assert len(lines) == 2 + grid.n_cells
    back = read_snapshot(path)
    assert back.t == 0.375
    assert back.grid.shape == grid.shape
    assert np.array_equal(back.values, f.values)


def test_snapshot_errors(tmp_path: Path) -> None:
    """Test snapshot I/O failures carry the path."""
    grid = build_grid(1, 2, 4, 1.0)
    f = DistributionField(values=np.ones(grid.shape), grid=grid)
    with pytest.raises(OutputError) as err:
        write_snapshot(tmp_path / "missing" / "snapshot.csv", f)
    assert err.value.path is not None
    (tmp_path / "other.csv").write_text("a,b\n1,2\n")
    with pytest.raises(OutputError):
        read_snapshot(tmp_path / "other.csv")
    path = tmp_path / "snapshot.csv"
    write_snapshot(path, f)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(OutputError, match="expected 8"):
        read_snapshot(path)
