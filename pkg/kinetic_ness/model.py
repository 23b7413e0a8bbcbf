"""Physical parameters, validation and closed-form kernels of the kinetic model."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
from mashumaro import DataClassDictMixin
from mashumaro.config import BaseConfig

from .constants import DEFAULT_WEIGHT_S, DEFAULT_WEIGHT_ZETA, VMAX_SIGMAS
from .enums import BoundaryMode, ProfileKind
from .errors import ValidationError

LOGGER = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]


@dataclass
class StrictModel(DataClassDictMixin):
    """Base for models parsed from user documents: unknown keys are rejected."""

    class Config(BaseConfig):
        """Mashumaro options."""

        forbid_extra_keys = True


@dataclass(kw_only=True)
class ProfileSpec(StrictModel):
    """Model for a scalar profile over the unit box (per cell or per wall face)."""

    kind: ProfileKind = ProfileKind.CONSTANT
    # value: used by the constant profile
    value: float = 1.0
    # low/high: end values of the linear ramp or the two plateaus
    low: float = 1.0
    high: float = 1.0
    # axis: coordinate the ramp/plateau varies along
    axis: int = 0
    # split: plateau boundary along axis
    split: float = 0.5
    # table: explicit values, one per cell (or per face) in grid order
    table: list[float] | None = None

    @classmethod
    def constant(cls, value: float) -> ProfileSpec:
        """Create a constant profile."""
        return cls(kind=ProfileKind.CONSTANT, value=value)

    def bounds(self) -> tuple[float, float]:
        """Return (lower, upper) bound of the profile values."""
        if self.kind == ProfileKind.CONSTANT:
            return self.value, self.value
        if self.kind == ProfileKind.TABLE:
            if not self.table:
                return math.nan, math.nan
            return min(self.table), max(self.table)
        return min(self.low, self.high), max(self.low, self.high)

    def evaluate(self, points: FloatArray) -> FloatArray:
        """Evaluate the profile at points of shape (n, d)."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        count = points.shape[0]
        if self.kind == ProfileKind.CONSTANT:
            return np.full(count, self.value)
        if self.kind == ProfileKind.TABLE:
            values = np.asarray(self.table or [], dtype=np.float64)
            if values.size != count:
                msg = f"profile table has {values.size} values, expected {count}"
                raise ValidationError([msg])
            return values.copy()
        coord = points[:, self.axis]
        if self.kind == ProfileKind.LINEAR:
            return self.low + (self.high - self.low) * coord
        return np.where(coord < self.split, self.low, self.high)

    def problems(self, path: str, dimension: int) -> list[str]:
        """Return the structural problems of this profile."""
        errors: list[str] = []
        if not 0 <= self.axis < dimension:
            errors.append(f"{path}.axis: axis {self.axis} outside [0, {dimension})")
        if self.kind == ProfileKind.TABLE and not self.table:
            errors.append(f"{path}.table: table profile needs values")
        values = self.bounds()
        if any(not math.isfinite(x) for x in values) and self.kind != ProfileKind.TABLE:
            errors.append(f"{path}: profile values must be finite")
        return errors


@dataclass(kw_only=True)
class RegionSpec(StrictModel):
    """Model for an axis-aligned sub-box of the unit box."""

    lower: list[float] = field(default_factory=lambda: [0.0, 0.0])
    upper: list[float] = field(default_factory=lambda: [1.0, 1.0])

    def contains(self, points: FloatArray) -> npt.NDArray[np.bool_]:
        """Return the indicator of the region at points of shape (n, d)."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        dim = points.shape[1]
        lower = np.asarray(self.lower[:dim], dtype=np.float64)
        upper = np.asarray(self.upper[:dim], dtype=np.float64)
        return np.all((points >= lower) & (points <= upper), axis=1)


@dataclass(kw_only=True)
class ThermostatSpec(StrictModel):
    """Model for one BGK heat thermostat."""

    # eta: coupling strength (1/time)
    eta: float
    # temperature: thermostat temperature (velocity^2 units)
    temperature: float
    region: RegionSpec = field(default_factory=RegionSpec)


@dataclass(kw_only=True)
class BoundarySpec(StrictModel):
    """Model for the boundary condition of the unit box."""

    mode: BoundaryMode = BoundaryMode.MAXWELL
    # accommodation: fraction of diffusive re-emission per wall face, in [0, 1]
    accommodation: ProfileSpec = field(default_factory=lambda: ProfileSpec.constant(0.0))
    # wall_temperature: temperature of the wall Maxwellian per wall face
    wall_temperature: ProfileSpec = field(default_factory=lambda: ProfileSpec.constant(1.0))


@dataclass(kw_only=True)
class WeightSpec(StrictModel):
    """Model for an admissible velocity weight <v>^k exp(zeta <v>^s)."""

    k: float = 0.0
    zeta: float = 0.0
    s: float = 0.0

    @classmethod
    def monitoring(cls, dimension: int) -> WeightSpec:
        """Return the default monitoring weight for the given dimension."""
        return cls(k=dimension + 2.0, zeta=DEFAULT_WEIGHT_ZETA, s=DEFAULT_WEIGHT_S)

    def problems(self, path: str, dimension: int) -> list[str]:
        """Return the admissibility violations of this weight."""
        errors: list[str] = []
        if self.k < 0:
            errors.append(f"{path}.k: k must be >= 0")
        if self.zeta < 0:
            errors.append(f"{path}.zeta: zeta must be >= 0")
        if not 0 <= self.s <= 1:
            errors.append(f"{path}.s: s outside [0, 1]")
        elif self.s == 0 and self.k <= dimension + 1:
            errors.append(f"{path}.k: k must exceed d+1 when s=0 (d+1 = {dimension + 1})")
        elif self.s > 0 and self.zeta <= 0:
            errors.append(f"{path}.zeta: zeta must be > 0 when s in (0, 1]")
        return errors

    def is_admissible(self, dimension: int) -> bool:
        """Return if the weight is admissible in the given dimension."""
        return not self.problems("weight", dimension)


@dataclass(kw_only=True)
class ModelParams(StrictModel):
    """Model for the physical configuration of the kinetic equation."""

    dimension: int = 1
    # alpha: strength of the energy nonlinearity, in [0, 1/2)
    alpha: float = 0.0
    tau: ProfileSpec = field(default_factory=lambda: ProfileSpec.constant(1.0))
    thermostats: list[ThermostatSpec] = field(default_factory=list)
    boundary: BoundarySpec = field(default_factory=BoundarySpec)
    weight: WeightSpec | None = None

    @property
    def tau0(self) -> float:
        """Return the lower bound of tau."""
        return self.tau.bounds()[0]

    @property
    def tau1(self) -> float:
        """Return the upper bound of tau."""
        return self.tau.bounds()[1]

    @property
    def monitoring_weight(self) -> WeightSpec:
        """Return the weight used for norms (configured or default)."""
        return self.weight or WeightSpec.monitoring(self.dimension)

    def max_temperature(self) -> float:
        """Return the largest temperature that sets the velocity scale."""
        temps = [self.tau1]
        temps.extend(x.temperature for x in self.thermostats)
        if self.boundary.mode.has_walls and self.boundary.accommodation.bounds()[1] > 0:
            temps.append(self.boundary.wall_temperature.bounds()[1])
        return max(temps)

    def default_v_max(self) -> float:
        """Return the default velocity truncation radius."""
        return VMAX_SIGMAS * math.sqrt(self.max_temperature())


@dataclass
class DiffusivityProfile:
    """Per-cell diffusivity Lambda(x) of the Fokker-Planck operator."""

    values: FloatArray
    lower: float
    upper: float

    def __post_init__(self) -> None:
        """Check the bounds after init."""
        self.values = np.asarray(self.values, dtype=np.float64)
        if not 0 < self.lower <= self.upper:
            msg = f"diffusivity bounds must satisfy 0 < lower <= upper, got {self.lower}"
            raise ValidationError([msg])
        if np.any(self.values < self.lower) or np.any(self.values > self.upper):
            msg = f"diffusivity values outside [{self.lower}, {self.upper}]"
            raise ValidationError([msg])

    @classmethod
    def from_values(cls, values: FloatArray) -> DiffusivityProfile:
        """Create a profile whose bounds are the extreme values."""
        values = np.asarray(values, dtype=np.float64)
        return cls(values=values, lower=float(values.min()), upper=float(values.max()))

    @property
    def is_constant(self) -> bool:
        """Return if the diffusivity is the same in every cell."""
        return self.lower == self.upper


def validate_params(p: ModelParams) -> list[str]:
    """Return the list of violated constraints (empty when the parameters are valid)."""
    errors: list[str] = []
    if p.dimension not in (1, 2):
        errors.append(f"dimension: d must be 1 or 2, got {p.dimension}")
    dim = p.dimension if p.dimension in (1, 2) else 1
    if not 0 <= p.alpha < 0.5:
        errors.append(f"alpha: alpha outside [0, 1/2), got {p.alpha}")
    errors.extend(p.tau.problems("tau", dim))
    if not p.tau0 > 0:
        errors.append(f"tau: tau0 must be > 0, got {p.tau0}")
    for idx, thermostat in enumerate(p.thermostats):
        path = f"thermostats[{idx}]"
        if thermostat.eta < 0:
            errors.append(f"{path}.eta: eta must be >= 0, got {thermostat.eta}")
        if not thermostat.temperature > 0:
            errors.append(f"{path}.temperature: temperature must be > 0")
        region = thermostat.region
        if len(region.lower) < dim or len(region.upper) < dim:
            errors.append(f"{path}.region: region needs {dim} lower/upper coordinates")
            continue
        for axis in range(dim):
            lo, hi = region.lower[axis], region.upper[axis]
            if not 0 <= lo <= hi <= 1:
                errors.append(f"{path}.region: region must lie inside the unit box")
                break
    if p.boundary.mode.has_walls:
        errors.extend(p.boundary.accommodation.problems("boundary.accommodation", dim))
        iota_lo, iota_hi = p.boundary.accommodation.bounds()
        if not 0 <= iota_lo <= iota_hi <= 1:
            errors.append("boundary.accommodation: accommodation values outside [0, 1]")
        if iota_hi > 0:
            # wall temperature only matters where re-emission happens
            errors.extend(p.boundary.wall_temperature.problems("boundary.wall_temperature", dim))
            if not p.boundary.wall_temperature.bounds()[0] > 0:
                errors.append("boundary.wall_temperature: wall temperature must be > 0")
    if p.weight is not None:
        errors.extend(p.weight.problems("weight", dim))
    return errors


def ensure_valid(p: ModelParams) -> None:
    """Raise ValidationError when the parameters are not valid."""
    if errors := validate_params(p):
        raise ValidationError(errors)


def _speed_squared(v: npt.ArrayLike, d: int) -> FloatArray:
    """Return |v|^2; the trailing axis holds the d components (optional when d=1)."""
    arr = np.asarray(v, dtype=np.float64)
    if d == 1:
        if arr.ndim > 0 and arr.shape[-1:] == (1,):
            arr = arr[..., 0]
        return arr * arr
    if arr.shape[-1:] != (d,):
        msg = f"velocity must have a trailing axis of length {d}"
        raise ValueError(msg)
    return np.sum(arr * arr, axis=-1)


def maxwellian_from_speed2(temperature: float, speed2: FloatArray, d: int) -> FloatArray:
    """Return the Maxwellian density evaluated at precomputed |v|^2."""
    if not temperature > 0:
        msg = f"temperature must be > 0, got {temperature}"
        raise ValueError(msg)
    norm = (2.0 * math.pi * temperature) ** (-0.5 * d)
    return norm * np.exp(-speed2 / (2.0 * temperature))


def maxwellian(temperature: float, v: npt.ArrayLike, d: int) -> FloatArray:
    """Return (2 pi T)^(-d/2) exp(-|v|^2 / 2T)."""
    return maxwellian_from_speed2(temperature, _speed_squared(v, d), d)


def wall_maxwellian(theta: float, v: npt.ArrayLike, d: int) -> FloatArray:
    """Return the flux-normalized wall Maxwellian sqrt(2 pi / Theta) M_Theta."""
    if not theta > 0:
        msg = f"wall temperature must be > 0, got {theta}"
        raise ValueError(msg)
    return math.sqrt(2.0 * math.pi / theta) * maxwellian(theta, v, d)


def weight_from_speed2(w: WeightSpec, speed2: FloatArray) -> FloatArray:
    """Return the weight evaluated at precomputed |v|^2."""
    bracket = np.sqrt(1.0 + speed2)
    return bracket**w.k * np.exp(w.zeta * bracket**w.s)


def weight_eval(w: WeightSpec, v: npt.ArrayLike, d: int = 1) -> FloatArray:
    """Return <v>^k exp(zeta <v>^s) with <v> = sqrt(1 + |v|^2)."""
    return weight_from_speed2(w, _speed_squared(v, d))


def effective_diffusivity(alpha: float, nu: float, tau_values: FloatArray) -> DiffusivityProfile:
    """Return Lambda(x) = alpha nu + (1 - alpha) tau(x)."""
    values = alpha * nu + (1.0 - alpha) * np.asarray(tau_values, dtype=np.float64)
    return DiffusivityProfile.from_values(values)
