"""Tests for the split time integrator and run traces."""

import math
from pathlib import Path

import numpy as np
import pytest

from kinetic_ness.analysis import energy_ball_radius, energy_envelope
from kinetic_ness.enums import BoundaryMode, EnergyMode
from kinetic_ness.errors import CFLViolationError, InstabilityError, ValidationError
from kinetic_ness.integrator import IntegratorConfig, KineticIntegrator, run_transient, step
from kinetic_ness.model import (
    BoundarySpec,
    DiffusivityProfile,
    ModelParams,
    ProfileSpec,
    RegionSpec,
    ThermostatSpec,
)
from kinetic_ness.operators import bgk_apply, cfl_max_dt, fp_apply_values, transport_values
from kinetic_ness.phasespace import (
    PhaseSpaceGrid,
    build_grid,
    energy_functional,
    mass,
    project_maxwellian,
)

from .conftest import homogeneous_params, walled_params


def test_default_dt_is_cfl_bound() -> None:
    """Test the step defaults to 0.9 dx / v_max."""
    grid = build_grid(1, 32, 64, 8.0)
    integrator = KineticIntegrator(ModelParams(), grid, IntegratorConfig())
    assert integrator.dt == pytest.approx(0.9 / 256)
    assert integrator.dt == cfl_max_dt(grid)


def test_invalid_settings_rejected(walled_grid: PhaseSpaceGrid) -> None:
    """Test invalid parameters, settings and steps are rejected up front."""
    with pytest.raises(ValidationError):
        KineticIntegrator(ModelParams(alpha=0.7), walled_grid, IntegratorConfig())
    with pytest.raises(ValidationError):
        KineticIntegrator(ModelParams(), walled_grid, IntegratorConfig(dt=-1.0))
    with pytest.raises(ValidationError, match="unbounded"):
        KineticIntegrator(ModelParams(), walled_grid, IntegratorConfig(t_final=float("inf")))
    with pytest.raises(CFLViolationError):
        KineticIntegrator(ModelParams(), walled_grid, IntegratorConfig(dt=1.0))
    with pytest.raises(ValidationError, match="diffusivity has"):
        KineticIntegrator(
            ModelParams(),
            walled_grid,
            IntegratorConfig(
                energy_mode=EnergyMode.FROZEN,
                diffusivity=DiffusivityProfile.from_values(np.ones(3)),
            ),
        )


def test_mass_and_positivity_with_walls_and_thermostats() -> None:
    """Test 10^4 bounded-domain steps keep mass to roundoff and f >= 0."""
    grid = build_grid(1, 32, 64, 8.0 * np.sqrt(2.0))
    params = walled_params(alpha=0.05, iota=0.5)
    integrator = KineticIntegrator(params, grid, IntegratorConfig())
    rho = np.linspace(0.5, 1.5, grid.nx)
    f = project_maxwellian(rho, 1.0, grid, renormalize=True)
    m0 = mass(f)
    for _ in range(10_000):
        f = integrator.step(f)
        assert f.values.min() >= 0
    assert abs(mass(f) - m0) <= 1e-10 * m0


def test_two_dimensional_step() -> None:
    """Test a d=2 step with walls conserves mass and stays positive."""
    grid = build_grid(2, 4, 12, 6.0)
    params = ModelParams(
        dimension=2,
        alpha=0.1,
        thermostats=[
            ThermostatSpec(
                eta=1.0, temperature=2.0, region=RegionSpec(lower=[0.0, 0.0], upper=[0.5, 1.0])
            )
        ],
        boundary=walled_params(iota=1.0).boundary,
    )
    f0 = project_maxwellian(1.0, 1.0, grid, renormalize=True)
    f = f0
    for _ in range(25):
        f = step(f, params, IntegratorConfig())
    assert f.values.min() >= 0
    assert mass(f) == pytest.approx(mass(f0), rel=1e-12)


def test_homogeneous_steady_energy(homogeneous_grid: PhaseSpaceGrid) -> None:
    """Test the homogeneous run relaxes to the energy (2 Lambda + eta T) / (eta + 2) = 2."""
    config = IntegratorConfig(dt=0.01, t_final=30.0, steady_tol=1e-8, record_every=50)
    f0 = project_maxwellian(1.0, 1.0, homogeneous_grid, renormalize=True)
    trace = run_transient(f0, homogeneous_params(), config)
    assert trace.steady_reached
    assert trace.final.t < 30.0
    assert energy_functional(trace.final) == pytest.approx(2.0, rel=1e-2)
    assert trace.column("mass") == pytest.approx(1.0, rel=1e-12)
    assert np.all(trace.column("boundary_energy_flux") == 0.0)
    assert np.all(np.isnan(trace.column("l2w_distance")))


def test_frozen_and_self_consistent_agree_at_alpha_zero(walled_grid: PhaseSpaceGrid) -> None:
    """Test both energy modes take the same step when alpha = 0."""
    params = walled_params(alpha=0.0)
    f = project_maxwellian(1.0, 1.2, walled_grid, renormalize=True)
    frozen = KineticIntegrator(
        params, walled_grid, IntegratorConfig(energy_mode=EnergyMode.FROZEN)
    )
    coupled = KineticIntegrator(params, walled_grid, IntegratorConfig())
    assert np.allclose(frozen.step(f).values, coupled.step(f).values, rtol=1e-14, atol=0)


def test_self_consistent_diffusivity(walled_grid: PhaseSpaceGrid) -> None:
    """Test Lambda = alpha E_f + (1 - alpha) tau is rebuilt from the field."""
    params = walled_params(alpha=0.2)
    integrator = KineticIntegrator(params, walled_grid, IntegratorConfig())
    f = project_maxwellian(1.0, 3.0, walled_grid, renormalize=True)
    expected = 0.2 * energy_functional(f) + 0.8
    assert integrator.diffusivity_for(f.values).values == pytest.approx(expected)


def test_record_every_zero_keeps_endpoints(walled_grid: PhaseSpaceGrid) -> None:
    """Test record_every = 0 samples only the initial and final state."""
    f0 = project_maxwellian(1.0, 1.0, walled_grid, renormalize=True)
    config = IntegratorConfig(t_final=0.5, record_every=0)
    trace = run_transient(f0, walled_params(), config, reference=f0)
    assert len(trace.samples) == 2
    assert trace.times.tolist() == [0.0, pytest.approx(0.5)]
    assert trace.samples[0].l2w_distance == 0.0
    assert trace.samples[1].l2w_distance > 0.0
    assert trace.steps == int(np.ceil(0.5 / cfl_max_dt(walled_grid) - 1e-9))


def test_max_steps_cap(walled_grid: PhaseSpaceGrid) -> None:
    """Test the step cap ends a run early."""
    f0 = project_maxwellian(1.0, 1.0, walled_grid, renormalize=True)
    trace = run_transient(f0, walled_params(), IntegratorConfig(t_final=100.0, max_steps=7))
    assert trace.steps == 7
    assert not trace.steady_reached
    assert len(trace.samples) == 8


def test_instability_reported(walled_grid: PhaseSpaceGrid) -> None:
    """Test non-finite values stop the run with the offending step index."""

    def forcing(values: np.ndarray) -> np.ndarray:
        return np.full_like(values, np.inf)

    integrator = KineticIntegrator(
        walled_params(), walled_grid, IntegratorConfig(t_final=1.0), forcing=forcing
    )
    f0 = project_maxwellian(1.0, 1.0, walled_grid, renormalize=True)
    with pytest.raises(InstabilityError) as err:
        integrator.run_transient(f0)
    assert err.value.step_index == 1
    assert err.value.exit_code == 3

    later = f0.with_values(f0.values, t=5 * integrator.dt)
    with pytest.raises(InstabilityError) as err:
        integrator.step(later)
    assert err.value.step_index == 6


def test_specular_energy_stays_in_ball() -> None:
    """Test the energy of a hot start on specular walls enters the absorbing ball."""
    grid = build_grid(1, 4, 32, 8.0 * np.sqrt(3.0))
    params = ModelParams(
        alpha=0.05,
        tau=ProfileSpec.constant(1.0),
        thermostats=[
            ThermostatSpec(eta=1.0, temperature=2.0, region=RegionSpec(lower=[0.0], upper=[0.5]))
        ],
    )
    f0 = project_maxwellian(1.0, 3.0, grid, renormalize=True)
    config = IntegratorConfig(t_final=1e9, max_steps=10_000, record_every=50, stop_at_steady=False)
    trace = run_transient(f0, params, config)
    energy = trace.column("energy")
    radius = energy_ball_radius(params)
    assert energy[0] == pytest.approx(3.0, rel=1e-3)
    assert np.all(energy <= 1.05 * max(energy[0], radius))
    tail = energy[trace.times >= 5.0]
    assert tail.size > 0
    assert np.all(tail <= 1.2 * radius)
    envelope = energy_envelope(trace.times, energy[0], params)
    assert np.all(energy <= 1.05 * envelope)


def test_trace_csv(tmp_path: Path, walled_grid: PhaseSpaceGrid) -> None:
    """Test the trace CSV layout."""
    f0 = project_maxwellian(1.0, 1.0, walled_grid, renormalize=True)
    trace = run_transient(f0, walled_params(), IntegratorConfig(t_final=0.1, record_every=2))
    path = tmp_path / "run.csv"
    trace.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,mass,energy,l2w_distance,boundary_energy_flux"
    assert len(lines) == len(trace.samples) + 1
    assert float(lines[1].split(",")[1]) == mass(f0)
    with pytest.raises(KeyError):
        trace.column("pressure")


def _relaxation_error(nv: int, dt: float = 0.00125) -> float:
    """Return max |E(t) - Lambda - (E(0) - Lambda) exp(-2t)| of a periodic run with Lambda = 1."""
    grid = build_grid(1, 2, nv, 8.0 * math.sqrt(3.0))
    params = ModelParams(boundary=BoundarySpec(mode=BoundaryMode.PERIODIC))
    config = IntegratorConfig(
        dt=dt,
        t_final=2.0,
        energy_mode=EnergyMode.FROZEN,
        diffusivity=DiffusivityProfile.from_values(np.ones(grid.n_cells)),
        record_every=40,
        stop_at_steady=False,
    )
    f0 = project_maxwellian(1.0, 3.0, grid, renormalize=True)
    trace = run_transient(f0, params, config)
    energy = trace.column("energy")
    exact = 1.0 + (energy[0] - 1.0) * np.exp(-2.0 * trace.times)
    return float(np.max(np.abs(energy - exact)))


def test_homogeneous_relaxation_matches_ode() -> None:
    """Test pure Fokker-Planck relaxation follows dE/dt = 2 (Lambda - E)."""
    assert _relaxation_error(64) <= 0.05


def test_homogeneous_relaxation_refines() -> None:
    """Test the relaxation error falls at least twofold per doubling of Nv."""
    errors = [_relaxation_error(nv) for nv in (64, 128, 256)]
    assert errors[0] >= 2.0 * errors[1]
    assert errors[1] >= 2.0 * errors[2]
    assert errors[2] <= 0.01


def test_small_step_matches_operator_sum(walled_grid: PhaseSpaceGrid) -> None:
    """Test (S(dt) f - f) / dt approaches transport + collision + thermostat terms."""
    dt = 1e-6
    params = walled_params(alpha=0.0, iota=0.5)
    integrator = KineticIntegrator(params, walled_grid, IntegratorConfig(dt=dt))
    rho = np.linspace(0.5, 1.5, walled_grid.nx)
    f = project_maxwellian(rho, 1.3, walled_grid, renormalize=True)
    rate = (integrator.step_values(f.values) - f.values) / dt
    transport = (transport_values(f.values, walled_grid, dt, integrator.wall) - f.values) / dt
    collision = fp_apply_values(f.values, walled_grid, np.ones(walled_grid.n_cells))
    expected = transport + collision + bgk_apply(f, params.thermostats)
    assert np.abs(rate - expected).max() <= 1e-3 * np.abs(expected).max()
