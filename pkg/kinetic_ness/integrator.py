"""Time evolution with Strang splitting and an implicit collision step."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .constants import DEFAULT_STEADY_TOL, RUN_CSV_COLUMNS
from .enums import EnergyMode
from .errors import CFLViolationError, InstabilityError, ValidationError
from .helpers import write_table
from .model import (
    DiffusivityProfile,
    FloatArray,
    ModelParams,
    WeightSpec,
    effective_diffusivity,
    ensure_valid,
)
from .operators import (
    CollisionWorkspace,
    ThermostatWorkspace,
    WallData,
    boundary_energy_flux,
    cfl_max_dt,
    collect_outgoing,
    resolve_walls,
    transport_values,
)
from .phasespace import DistributionField, PhaseSpaceGrid, energy_of, mass_of, norm_of

LOGGER = logging.getLogger(__name__)

# explicit rate added after the collision solve (used by the linearized dynamics)
Forcing = Callable[[FloatArray], FloatArray]

__all__ = (
    "IntegratorConfig",
    "KineticIntegrator",
    "RunTrace",
    "TraceSample",
    "cfl_max_dt",
    "run_transient",
    "step",
)


@dataclass(kw_only=True)
class IntegratorConfig:
    """Settings of one time-evolution run."""

    # dt: time step, None selects the CFL bound
    dt: float | None = None
    t_final: float = 1.0
    energy_mode: EnergyMode = EnergyMode.SELF_CONSISTENT
    # diffusivity: frozen Lambda(x); None means tau(x)
    diffusivity: DiffusivityProfile | None = None
    # steady_tol: threshold on ||f_{n+1} - f_n||_{L2_w} / dt
    steady_tol: float = DEFAULT_STEADY_TOL
    # record_every: sample cadence in steps, 0 = initial and final only
    record_every: int = 1
    weight: WeightSpec | None = None
    # max_steps: optional hard cap on the number of steps
    max_steps: int | None = None
    # stop_at_steady: end the run once the steady threshold is met
    stop_at_steady: bool = True
    # renormalize: scale the initial field to mass 1 on entry
    renormalize: bool = False

    def problems(self) -> list[str]:
        """Return the violated constraints of this configuration."""
        errors: list[str] = []
        if self.dt is not None and not self.dt > 0:
            errors.append(f"integrator.dt: dt must be > 0, got {self.dt}")
        if not self.t_final >= 0:
            errors.append(f"integrator.t_final: t_final must be >= 0, got {self.t_final}")
        if not self.steady_tol >= 0:
            errors.append("integrator.steady_tol: steady_tol must be >= 0")
        if self.record_every < 0:
            errors.append("integrator.record_every: record_every must be >= 0")
        if self.max_steps is not None and self.max_steps < 1:
            errors.append("integrator.max_steps: max_steps must be >= 1")
        if math.isinf(self.t_final) and self.max_steps is None:
            errors.append("integrator.max_steps: an unbounded run needs max_steps")
        return errors


@dataclass
class TraceSample:
    """One row of a run trace."""

    t: float
    mass: float
    energy: float
    l2w_distance: float
    boundary_energy_flux: float


@dataclass
class RunTrace:
    """Sampled diagnostics of a run plus its final state."""

    samples: list[TraceSample]
    final: DistributionField
    steady_reached: bool = False
    steps: int = 0
    # last_increment: ||f_{n+1} - f_n||_{L2_w} / dt of the last step taken
    last_increment: float = math.nan
    metadata: dict[str, float | int | str] = field(default_factory=dict)

    def column(self, name: str) -> FloatArray:
        """Return one column of the trace as an array."""
        if name not in RUN_CSV_COLUMNS:
            msg = f"unknown trace column {name}"
            raise KeyError(msg)
        return np.asarray([getattr(x, name) for x in self.samples], dtype=np.float64)

    @property
    def times(self) -> FloatArray:
        """Return the sample times."""
        return self.column("t")

    def distance_series(self) -> list[tuple[float, float]]:
        """Return the (t, weighted distance) pairs."""
        return [(x.t, x.l2w_distance) for x in self.samples]

    def to_frame(self) -> pd.DataFrame:
        """Return the trace as a table with the run.csv columns."""
        return pd.DataFrame({name: self.column(name) for name in RUN_CSV_COLUMNS})

    def to_csv(self, path: Path | str) -> None:
        """Write the trace to a CSV file with a header row."""
        write_table(self.to_frame(), path)


class KineticIntegrator:
    """Strang-split solver of the kinetic equation on a fixed grid.

    One step is transport(dt/2), thermostat(dt/2), implicit collision(dt),
    thermostat(dt/2), transport(dt/2). In self-consistent mode the diffusivity
    alpha E_f + (1 - alpha) tau is rebuilt from the field at the start of
    every step.
    """

    def __init__(
        self,
        params: ModelParams,
        grid: PhaseSpaceGrid,
        config: IntegratorConfig,
        forcing: Forcing | None = None,
    ) -> None:
        """Initialize the integrator and resolve all grid-dependent data."""
        ensure_valid(params)
        if errors := config.problems():
            raise ValidationError(errors)
        self.params = params
        self.grid = grid
        self.config = config
        self.forcing = forcing
        self.weight = config.weight or params.monitoring_weight
        self.tau_values = params.tau.evaluate(grid.cell_centers).reshape(grid.spatial_shape)
        self.wall: WallData | None = resolve_walls(grid, params.boundary)
        self.thermostats = ThermostatWorkspace.build(grid, params.thermostats)
        limit = cfl_max_dt(grid)
        self.dt = limit if config.dt is None else config.dt
        if self.dt > limit * (1.0 + 1e-12):
            msg = f"dt={self.dt:.6e} exceeds the CFL bound {limit:.6e}"
            raise CFLViolationError(msg)
        self._frozen = self._frozen_diffusivity()
        self._workspace: CollisionWorkspace | None = None

    def _frozen_diffusivity(self) -> DiffusivityProfile:
        if self.config.diffusivity is None:
            return DiffusivityProfile.from_values(self.tau_values)
        values = np.asarray(self.config.diffusivity.values, dtype=np.float64)
        if values.size != self.grid.n_cells:
            msg = f"diffusivity has {values.size} values, expected {self.grid.n_cells}"
            raise ValidationError([msg])
        return replace(self.config.diffusivity, values=values.reshape(self.grid.spatial_shape))

    def diffusivity_for(self, values: FloatArray) -> DiffusivityProfile:
        """Return the diffusivity used for a step starting at values."""
        if self.config.energy_mode == EnergyMode.FROZEN:
            return self._frozen
        return effective_diffusivity(
            self.params.alpha, energy_of(values, self.grid), self.tau_values
        )

    def collision_workspace(
        self, diffusivity: DiffusivityProfile, dt: float
    ) -> CollisionWorkspace:
        """Return the banded systems for (diffusivity, dt), reusing the cached ones."""
        if self._workspace is None or not self._workspace.matches(diffusivity, dt):
            self._workspace = CollisionWorkspace.build(self.grid, diffusivity, dt)
        return self._workspace

    def boundary_flux_of(self, values: FloatArray) -> float:
        """Return the wall energy-flux diagnostic of raw values (0 for a periodic box)."""
        if self.wall is None:
            return 0.0
        return boundary_energy_flux(collect_outgoing(values, self.wall), self.wall)

    def step_values(self, values: FloatArray, dt: float | None = None) -> FloatArray:
        """Return the raw values after one split step."""
        dt = self.dt if dt is None else dt
        half = 0.5 * dt
        diffusivity = self.diffusivity_for(values)
        result = transport_values(values, self.grid, half, self.wall)
        result = self.thermostats.relax(result, half)
        result = self.collision_workspace(diffusivity, dt).solve(result)
        if self.forcing is not None:
            result = result + dt * self.forcing(values)
        result = self.thermostats.relax(result, half)
        return transport_values(result, self.grid, half, self.wall)

    def step(self, f: DistributionField) -> DistributionField:
        """Return the field after one step of size dt."""
        values = self.step_values(f.values)
        if not np.isfinite(values).all():
            # steps are counted from t = 0
            index = round(f.t / self.dt) + 1
            msg = f"non-finite values at step {index} (t={f.t:.6e})"
            raise InstabilityError(msg, step_index=index)
        return f.with_values(values, t=f.t + self.dt)

    def _sample(
        self, values: FloatArray, t: float, reference: DistributionField | None
    ) -> TraceSample:
        distance = (
            norm_of(values - reference.values, self.grid, self.weight, 2)
            if reference is not None
            else math.nan
        )
        return TraceSample(
            t=t,
            mass=mass_of(values, self.grid),
            energy=energy_of(values, self.grid),
            l2w_distance=distance,
            boundary_energy_flux=self.boundary_flux_of(values),
        )

    def run_transient(
        self, f0: DistributionField, reference: DistributionField | None = None
    ) -> RunTrace:
        """Step from f0 until t_final, the step cap or steady detection."""
        config = self.config
        values = np.array(f0.values, dtype=np.float64)
        if config.renormalize:
            total = mass_of(values, self.grid)
            if total > 0:
                values /= total
        t = f0.t
        t_end = f0.t + config.t_final
        samples = [self._sample(values, t, reference)]
        steps = 0
        steady = False
        increment = math.nan
        LOGGER.debug(
            "run: dt=%.4e t_final=%s mode=%s", self.dt, config.t_final, config.energy_mode
        )
        while t_end - t > 1e-12 * max(1.0, abs(t)):
            dt = min(self.dt, t_end - t)
            new_values = self.step_values(values, dt)
            steps += 1
            if not np.isfinite(new_values).all():
                msg = f"non-finite values at step {steps} (t={t:.6e})"
                raise InstabilityError(msg, step_index=steps)
            increment = norm_of(new_values - values, self.grid, self.weight, 2) / dt
            values = new_values
            t = t + dt
            if config.record_every and steps % config.record_every == 0:
                samples.append(self._sample(values, t, reference))
            if config.stop_at_steady and increment <= config.steady_tol:
                steady = True
                break
            if config.max_steps is not None and steps >= config.max_steps:
                break
        if t > samples[-1].t:
            samples.append(self._sample(values, t, reference))
        LOGGER.debug(
            "run finished after %d steps at t=%.4e, increment %.3e", steps, t, increment
        )
        return RunTrace(
            samples=samples,
            final=DistributionField(values=values, grid=self.grid, t=t, signed=f0.signed),
            steady_reached=steady or increment <= config.steady_tol,
            steps=steps,
            last_increment=increment,
            metadata={"dt": self.dt, "energy_mode": str(config.energy_mode)},
        )


def step(f: DistributionField, params: ModelParams, config: IntegratorConfig) -> DistributionField:
    """Return the field after one split step."""
    return KineticIntegrator(params, f.grid, config).step(f)


def run_transient(
    f0: DistributionField,
    params: ModelParams,
    config: IntegratorConfig,
    reference: DistributionField | None = None,
) -> RunTrace:
    """Evolve f0 and record its diagnostics."""
    return KineticIntegrator(params, f0.grid, config).run_transient(f0, reference)
