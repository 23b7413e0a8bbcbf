"""Command line interface: experiment commands and output emission."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .analysis import BudgetReport, homogeneous_oracle, moment_balance_check
from .config import RunConfig, parse_config
from .enums import Command
from .errors import KineticNessError, OutputError
from .integrator import KineticIntegrator, RunTrace
from .model import DiffusivityProfile
from .ness import (
    SteadyStateResult,
    fixed_point_ness,
    linear_steady,
    probe_map_F,
    stability_experiment,
)
from .operators import cfl_max_dt, resolve_walls
from .phasespace import DistributionField, PhaseSpaceGrid, write_snapshot
from .summary import NessSummary, RunSummary

LOGGER = logging.getLogger(__name__)


@dataclass
class CommandOutput:
    """Everything a command produced, ready to be written."""

    summary: RunSummary
    trace: RunTrace | None = None
    snapshot: DistributionField | None = None
    budget: BudgetReport | None = None
    written: list[Path] = field(default_factory=list)


def resolved_metadata(cfg: RunConfig, grid: PhaseSpaceGrid) -> dict[str, Any]:
    """Return the configuration with every default and derived value materialized."""
    limit = cfl_max_dt(grid)
    resolved: dict[str, Any] = {
        "d": grid.d,
        "Nx": grid.nx,
        "Nv": grid.nv,
        "v_max": grid.v_max,
        "dx": grid.dx,
        "dv": grid.dv,
        "cfl_max_dt": limit,
        "dt": cfg.integrator.dt if cfg.integrator.dt is not None else limit,
        "weight": (cfg.integrator.weight or cfg.model.monitoring_weight).to_dict(),
    }
    wall = resolve_walls(grid, cfg.model.boundary)
    if wall is not None and np.any(wall.iota > 0):
        diffusive = wall.iota > 0
        # deviation of the analytic kernel quadrature from flux 1 before renormalization
        resolved["wall_kernel_max_deviation"] = float(
            np.max(np.abs(wall.raw_kernel_flux[diffusive] - 1.0))
        )
    return {"config": cfg.to_dict(), "resolved": resolved}


def _steady_payload(result: SteadyStateResult) -> dict[str, Any]:
    return {
        "energy": result.energy,
        "mass": result.mass,
        "residual": result.residual,
        "steps": result.steps,
        "lambda_min": result.lambda_used.lower,
        "lambda_max": result.lambda_used.upper,
    }


def _simulate(cfg: RunConfig, grid: PhaseSpaceGrid, summary: RunSummary) -> CommandOutput:
    config = cfg.integrator_config(grid)
    trace = KineticIntegrator(cfg.model, grid, config).run_transient(cfg.initial_field(grid))
    summary.result = {
        "t": trace.final.t,
        "steps": trace.steps,
        "steady_reached": trace.steady_reached,
        "mass": trace.samples[-1].mass,
        "energy": trace.samples[-1].energy,
        "min_value": float(trace.final.values.min()),
    }
    return CommandOutput(summary=summary, trace=trace, snapshot=trace.final)


def _linear_ness(cfg: RunConfig, grid: PhaseSpaceGrid, summary: RunSummary) -> CommandOutput:
    config = cfg.integrator_config(grid)
    diffusivity = config.diffusivity or DiffusivityProfile.from_values(
        cfg.model.tau.evaluate(grid.cell_centers)
    )
    result = linear_steady(cfg.model, diffusivity, grid, config)
    summary.result = _steady_payload(result)
    return CommandOutput(summary=summary, trace=result.trace, snapshot=result.field)


def _ness(cfg: RunConfig, grid: PhaseSpaceGrid, summary: RunSummary) -> CommandOutput:
    config = cfg.integrator_config(grid)
    result = fixed_point_ness(cfg.model, grid, config, cfg.ness)
    summary.result = NessSummary(
        nu_star=result.nu_star,
        energy=result.steady.energy,
        E0=result.e0,
        alpha=cfg.model.alpha,
        iterations=result.state.iterations,
        residual=result.state.residual,
        regime_flag=result.regime_flag,
    )
    if cfg.ness.probe_points:
        probe = probe_map_F(
            cfg.model,
            grid,
            config,
            points=cfg.ness.probe_points,
            e0=result.e0,
            margin=cfg.ness.interval_margin,
        )
        summary.metadata["probe"] = {
            "nu": probe.nus,
            "F": probe.values,
            "lipschitz": probe.lipschitz,
            "interval_preserved": probe.interval_preserved,
        }
    return CommandOutput(summary=summary, trace=result.steady.trace, snapshot=result.steady.field)


def _stability(cfg: RunConfig, grid: PhaseSpaceGrid, summary: RunSummary) -> CommandOutput:
    config = cfg.integrator_config(grid)
    if cfg.model.alpha > 0:
        ness = fixed_point_ness(cfg.model, grid, config, cfg.ness)
        steady, nu_star = ness.steady, ness.nu_star
    else:
        tau = DiffusivityProfile.from_values(cfg.model.tau.evaluate(grid.cell_centers))
        steady = linear_steady(cfg.model, tau, grid, config)
        nu_star = steady.energy
    trace, fit = stability_experiment(cfg.model, steady, cfg.stability, config)
    summary.result = {"nu_star": nu_star, "steady_energy": steady.energy, "fit": fit.to_dict()}
    return CommandOutput(summary=summary, trace=trace, snapshot=trace.final)


def _oracle_check(cfg: RunConfig, grid: PhaseSpaceGrid, summary: RunSummary) -> CommandOutput:
    config = cfg.integrator_config(grid)
    lam = float(
        np.mean(config.diffusivity.values)
        if config.diffusivity is not None
        else np.mean(cfg.model.tau.evaluate(grid.cell_centers))
    )
    if cfg.model.thermostats:
        eta = cfg.model.thermostats[0].eta
        temperature = cfg.model.thermostats[0].temperature
    else:
        eta, temperature = 0.0, lam
    oracle = homogeneous_oracle(lam, eta, temperature)
    # the budget is evaluated on the state reached after t_final
    trace = KineticIntegrator(cfg.model, grid, config).run_transient(cfg.initial_field(grid))
    budget = moment_balance_check(trace.final, cfg.model, config)
    summary.result = {
        "oracle": {
            "lambda": lam,
            "eta": eta,
            "temperature": temperature,
            "steady_energy": oracle.steady_energy,
            "closed_form": oracle.closed_form,
            "relative_gap": oracle.relative_gap,
        },
        "budget": dict(budget.rows()),
    }
    return CommandOutput(summary=summary, trace=trace, snapshot=trace.final, budget=budget)


COMMANDS = {
    Command.SIMULATE: _simulate,
    Command.LINEAR_NESS: _linear_ness,
    Command.NESS: _ness,
    Command.STABILITY: _stability,
    Command.ORACLE_CHECK: _oracle_check,
}


def emit_outputs(output: CommandOutput, directory: Path | str, prefix: str = "") -> list[Path]:
    """Write run.csv, summary.json, snapshot.csv (and budget.csv) into directory."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        msg = f"cannot create output directory {directory}: {err}"
        raise OutputError(msg, path=str(directory)) from err
    written: list[Path] = []
    if output.trace is not None:
        path = directory / f"{prefix}run.csv"
        output.trace.to_csv(path)
        written.append(path)
    if output.snapshot is not None:
        path = directory / f"{prefix}snapshot.csv"
        write_snapshot(path, output.snapshot)
        written.append(path)
    if output.budget is not None:
        path = directory / f"{prefix}budget.csv"
        output.budget.to_csv(path)
        written.append(path)
    path = directory / f"{prefix}summary.json"
    try:
        path.write_bytes(output.summary.dump())
    except OSError as err:
        msg = f"cannot write summary {path}: {err}"
        raise OutputError(msg, path=str(path)) from err
    written.append(path)
    output.written = written
    return written


def run_command(command: Command, cfg: RunConfig, out: Path | str | None = None) -> int:
    """Execute one command and write its outputs; return the process exit status."""
    command = Command(command)
    directory = Path(out) if out is not None else Path(cfg.output.directory)
    metadata: dict[str, Any] = {}
    try:
        grid = cfg.build_grid()
        metadata = resolved_metadata(cfg, grid)
        if command == Command.VALIDATE:
            # resolves dt against the CFL bound and the wall data
            KineticIntegrator(cfg.model, grid, cfg.integrator_config(grid))
            LOGGER.info("configuration is valid")
            return 0
        output = COMMANDS[command](cfg, grid, RunSummary(command=command, metadata=metadata))
        emit_outputs(output, directory, cfg.output.prefix)
    except KineticNessError as err:
        LOGGER.error("%s failed: %s", command, err)
        if command.writes_outputs and not isinstance(err, OutputError):
            failure = RunSummary.from_error(command, err, metadata)
            try:
                emit_outputs(CommandOutput(summary=failure), directory, cfg.output.prefix)
            except OutputError:
                LOGGER.exception("cannot write the failure summary")
        return err.exit_code
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line interface."""
    parser = argparse.ArgumentParser(
        prog="kinetic-ness",
        description="Kinetic Fokker-Planck simulator with thermostats and Maxwell walls",
    )
    parser.add_argument("command", choices=[x.value for x in Command])
    parser.add_argument("--config", type=Path, required=True, help="TOML configuration file")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--verbose", action="store_true", help="enable debug logging")
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    command = Command(args.command)
    try:
        cfg = parse_config(args.config)
    except KineticNessError as err:
        LOGGER.error("invalid configuration: %s", err)
        if command.writes_outputs and args.out is not None:
            failure = RunSummary.from_error(command, err)
            try:
                emit_outputs(CommandOutput(summary=failure), args.out)
            except OutputError:
                LOGGER.exception("cannot write the failure summary")
        return err.exit_code
    return run_command(command, cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
