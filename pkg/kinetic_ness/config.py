"""Run configuration: strict TOML parsing into mashumaro models."""

from __future__ import annotations

import dataclasses
import logging
import re
import tomllib
import types
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Union, get_args, get_origin, get_type_hints

import numpy as np
from mashumaro.exceptions import ExtraKeysError, InvalidFieldValue, MissingField

from .constants import DEFAULT_STEADY_TOL
from .enums import EnergyMode
from .errors import ConfigError, ValidationError
from .integrator import IntegratorConfig
from .model import (
    DiffusivityProfile,
    ModelParams,
    ProfileSpec,
    StrictModel,
    WeightSpec,
    validate_params,
)
from .ness import NessSettings, StabilitySettings
from .phasespace import DistributionField, PhaseSpaceGrid, build_grid, project_maxwellian

LOGGER = logging.getLogger(__name__)

AUTO = "auto"

_HEADER = re.compile(r"^\s*\[{1,2}\s*([A-Za-z0-9_.\-\"]+)\s*\]{1,2}")
_ASSIGN = re.compile(r"^\s*([A-Za-z0-9_\-\"]+)\s*=")
_INDEX = re.compile(r"\[\d+\]")
_TOML_LINE = re.compile(r"line (\d+)")


@dataclass(kw_only=True)
class GridSection(StrictModel):
    """Model for the [grid] block."""

    nx: int = 32
    nv: int = 64
    # v_max: truncation radius, or "auto" for 8 sqrt(max temperature)
    v_max: float | str = AUTO

    def problems(self) -> list[str]:
        """Return the violated constraints of this block."""
        errors: list[str] = []
        if self.nx < 2:
            errors.append(f"grid.nx: Nx must be >= 2, got {self.nx}")
        if self.nv < 4 or self.nv % 2:
            errors.append(f"grid.nv: Nv must be an even number >= 4, got {self.nv}")
        if isinstance(self.v_max, str):
            if self.v_max != AUTO:
                errors.append(f"grid.v_max: expected a number or 'auto', got '{self.v_max}'")
        elif not self.v_max > 0:
            errors.append(f"grid.v_max: v_max must be > 0, got {self.v_max}")
        return errors

    def resolve_v_max(self, params: ModelParams) -> float:
        """Return the velocity truncation radius."""
        if isinstance(self.v_max, str):
            return params.default_v_max()
        return float(self.v_max)


@dataclass(kw_only=True)
class IntegratorSection(StrictModel):
    """Model for the [integrator] block."""

    # dt: time step, omitted = CFL bound
    dt: float | None = None
    t_final: float = 1.0
    energy_mode: EnergyMode = EnergyMode.SELF_CONSISTENT
    # diffusivity: frozen Lambda(x) profile, omitted = tau(x)
    diffusivity: ProfileSpec | None = None
    steady_tol: float = DEFAULT_STEADY_TOL
    max_steps: int | None = None
    weight: WeightSpec | None = None


@dataclass(kw_only=True)
class InitialSection(StrictModel):
    """Model for the [initial] block (initial data of simulate)."""

    # temperature: uniform initial temperature, omitted = mean of tau
    temperature: float | None = None
    density: ProfileSpec = field(default_factory=lambda: ProfileSpec.constant(1.0))


@dataclass(kw_only=True)
class OutputSection(StrictModel):
    """Model for the [output] block."""

    directory: str = "."
    prefix: str = ""
    # record_every: sample cadence of run.csv in steps, 0 = initial and final only
    record_every: int = 1


@dataclass(kw_only=True)
class RunConfig(StrictModel):
    """Model for a complete run configuration document."""

    model: ModelParams = field(default_factory=ModelParams)
    grid: GridSection = field(default_factory=GridSection)
    integrator: IntegratorSection = field(default_factory=IntegratorSection)
    initial: InitialSection = field(default_factory=InitialSection)
    ness: NessSettings = field(default_factory=NessSettings)
    stability: StabilitySettings = field(default_factory=StabilitySettings)
    output: OutputSection = field(default_factory=OutputSection)

    def problems(self) -> list[str]:
        """Return every violated constraint, each prefixed with its key path."""
        errors = [f"model.{x}" for x in validate_params(self.model)]
        errors.extend(self.grid.problems())
        integrator = self.integrator
        if integrator.dt is not None and not integrator.dt > 0:
            errors.append(f"integrator.dt: dt must be > 0, got {integrator.dt}")
        if not integrator.t_final >= 0:
            errors.append("integrator.t_final: t_final must be >= 0")
        if not integrator.steady_tol >= 0:
            errors.append("integrator.steady_tol: steady_tol must be >= 0")
        if integrator.max_steps is not None and integrator.max_steps < 1:
            errors.append("integrator.max_steps: max_steps must be >= 1")
        if integrator.diffusivity is not None:
            errors.extend(
                integrator.diffusivity.problems("integrator.diffusivity", self.model.dimension)
            )
            if not integrator.diffusivity.bounds()[0] > 0:
                errors.append("integrator.diffusivity: diffusivity must be > 0")
        if integrator.weight is not None:
            errors.extend(integrator.weight.problems("integrator.weight", self.model.dimension))
        if self.initial.temperature is not None and not self.initial.temperature > 0:
            errors.append("initial.temperature: temperature must be > 0")
        if self.initial.density.bounds()[0] < 0:
            errors.append("initial.density: density must be >= 0")
        errors.extend(self.ness.problems())
        errors.extend(self.stability.problems())
        if self.output.record_every < 0:
            errors.append("output.record_every: record_every must be >= 0")
        return errors

    def build_grid(self) -> PhaseSpaceGrid:
        """Return the phase-space grid of this run."""
        return build_grid(
            self.model.dimension,
            self.grid.nx,
            self.grid.nv,
            self.grid.resolve_v_max(self.model),
        )

    def integrator_config(self, grid: PhaseSpaceGrid) -> IntegratorConfig:
        """Return the runtime integrator settings on a grid."""
        section = self.integrator
        diffusivity = None
        if section.diffusivity is not None:
            diffusivity = DiffusivityProfile.from_values(
                section.diffusivity.evaluate(grid.cell_centers)
            )
        return IntegratorConfig(
            dt=section.dt,
            t_final=section.t_final,
            energy_mode=section.energy_mode,
            diffusivity=diffusivity,
            steady_tol=section.steady_tol,
            record_every=self.output.record_every,
            weight=section.weight or self.model.weight,
            max_steps=section.max_steps,
        )

    def initial_field(self, grid: PhaseSpaceGrid) -> DistributionField:
        """Return the initial data of simulate, renormalized to mass 1."""
        rho = self.initial.density.evaluate(grid.cell_centers)
        temperature = self.initial.temperature
        if temperature is None:
            temperature = float(np.mean(self.model.tau.evaluate(grid.cell_centers)))
        f0 = project_maxwellian(rho, temperature, grid, renormalize=True)
        total = float(np.sum(f0.values)) * grid.phase_volume
        if not total > 0:
            raise ValidationError(["initial.density: initial mass must be > 0"])
        return f0.with_values(f0.values / total)


def _parts(path: str) -> list[str]:
    return [x.strip('"') for x in path.split(".")]


def _same_key(wanted: str, current: str) -> bool:
    """Return if a path part matches a document part; an unindexed part matches any index."""
    return wanted == current or ("[" not in wanted and _INDEX.sub("", current) == wanted)


def find_line(text: str, path: str) -> int | None:
    """Return the 1-based line that defines the longest matching prefix of a key path."""
    wanted = _parts(path)
    # arrays: dotted path of every [[array]] table -> index of its latest element
    arrays: dict[str, int] = {}
    table: list[str] = []
    best: tuple[int, int] | None = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0]
        if header := _HEADER.match(stripped):
            raw = _parts(header.group(1))
            if stripped.lstrip().startswith("[["):
                plain = ".".join(raw)
                arrays[plain] = arrays.get(plain, -1) + 1
            table = []
            for idx, part in enumerate(raw):
                plain = ".".join(raw[: idx + 1])
                table.append(f"{part}[{arrays[plain]}]" if plain in arrays else part)
            current = table
        elif assign := _ASSIGN.match(stripped):
            current = [*table, assign.group(1).strip('"')]
        else:
            continue
        matches = len(current) <= len(wanted) and all(
            _same_key(w, c) for w, c in zip(wanted, current, strict=False)
        )
        if matches and (best is None or len(current) > best[0]):
            best = (len(current), number)
    return best[1] if best else None


def _type_name(hint: Any) -> str:
    if isinstance(hint, type):
        return hint.__name__
    return str(hint).replace("typing.", "")


def _check_value(value: Any, hint: Any, path: str, errors: list[tuple[str, str]]) -> None:
    """Append the schema violations of value against a type hint."""
    origin = get_origin(hint)
    if hint is Any:
        return
    if origin in (Union, types.UnionType):
        options = get_args(hint)
        if value is None and type(None) in options:
            return
        for option in options:
            if option is type(None):
                continue
            trial: list[tuple[str, str]] = []
            _check_value(value, option, path, trial)
            if not trial:
                return
        errors.append((path, f"expected {_type_name(hint)}, got {type(value).__name__}"))
        return
    if origin in (list, tuple):
        if not isinstance(value, list):
            errors.append((path, f"expected a list, got {type(value).__name__}"))
            return
        args = get_args(hint)
        item = args[0] if args else Any
        for idx, element in enumerate(value):
            _check_value(element, item, f"{path}[{idx}]", errors)
        return
    if isinstance(hint, type) and dataclasses.is_dataclass(hint):
        if not isinstance(value, dict):
            errors.append((path, f"expected a table, got {type(value).__name__}"))
            return
        _walk(value, hint, path, errors)
        return
    if isinstance(hint, type) and issubclass(hint, Enum):
        allowed = [x.value for x in hint]
        if value not in allowed:
            errors.append((path, f"expected one of {allowed}, got {value!r}"))
        return
    if hint is bool:
        ok = isinstance(value, bool)
    elif hint is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif hint is float:
        ok = isinstance(value, int | float) and not isinstance(value, bool)
    elif hint is str:
        ok = isinstance(value, str)
    else:
        ok = True
    if not ok:
        errors.append((path, f"expected {_type_name(hint)}, got {type(value).__name__}"))


def _walk(data: dict[str, Any], cls: type, path: str, errors: list[tuple[str, str]]) -> None:
    """Check a table against a dataclass: unknown keys, missing keys and value types."""
    hints = get_type_hints(cls)
    fields = {x.name: x for x in dataclasses.fields(cls)}
    prefix = f"{path}." if path else ""
    for key in data:
        if key not in fields:
            errors.append((f"{prefix}{key}", f"unknown key '{key}'"))
    for name, item in fields.items():
        if name not in data:
            if item.default is dataclasses.MISSING and item.default_factory is dataclasses.MISSING:
                errors.append((f"{prefix}{name}", f"missing required key '{name}'"))
            continue
        _check_value(data[name], hints[name], f"{prefix}{name}", errors)


def _split_problem(problem: str) -> tuple[str, str]:
    key_path, _, message = problem.partition(": ")
    return key_path, message


def _raise(errors: list[tuple[str, str]], text: str, source: str) -> None:
    lines = []
    for key_path, message in errors:
        line = find_line(text, key_path)
        where = f" (line {line})" if line else ""
        lines.append(f"{key_path}: {message}{where}")
    first_path = errors[0][0]
    raise ConfigError(
        f"{source}: " + "; ".join(lines), path=first_path, line=find_line(text, first_path)
    )


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    """Parse a TOML document strictly into a RunConfig."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        match = _TOML_LINE.search(str(err))
        raise ConfigError(
            f"{source}: invalid TOML: {err}", line=int(match.group(1)) if match else None
        ) from err
    errors: list[tuple[str, str]] = []
    _walk(data, RunConfig, "", errors)
    if errors:
        _raise(errors, text, source)
    try:
        config = RunConfig.from_dict(data)
    except (ExtraKeysError, InvalidFieldValue, MissingField, ValueError, TypeError) as err:
        raise ConfigError(f"{source}: {err}") from err
    if problems := config.problems():
        _raise([_split_problem(x) for x in problems], text, source)
    LOGGER.debug("parsed configuration %s", source)
    return config


def parse_config(path: Path | str) -> RunConfig:
    """Read and strictly parse a TOML configuration file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read configuration {path}: {err}", path=str(path)) from err
    return parse_config_text(text, str(path))
