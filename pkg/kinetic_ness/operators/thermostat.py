"""BGK heat thermostats: relaxation toward a Maxwellian inside sub-regions."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from kinetic_ness.model import FloatArray, ThermostatSpec
from kinetic_ness.phasespace import (
    DistributionField,
    PhaseSpaceGrid,
    cell_energy_of,
    density_of,
    discrete_maxwellian,
)


@dataclass(eq=False)
class ThermostatRegion:
    """One thermostat resolved on a grid."""

    eta: float
    temperature: float
    # mask: indicator of the region on the spatial shape
    mask: npt.NDArray[np.bool_]
    # maxwellian: M_T on the velocity nodes with discrete mass 1
    maxwellian: FloatArray


@dataclass(eq=False)
class ThermostatWorkspace:
    """All thermostats of a model resolved on a grid.

    Overlapping regions combine into a total rate eta_bar(x) and a
    rate-weighted mixture of renormalized Maxwellians.
    """

    grid: PhaseSpaceGrid
    regions: list[ThermostatRegion]
    # eta_bar: total relaxation rate per cell (spatial shape)
    eta_bar: FloatArray
    # target: per-cell Maxwellian mixture with discrete mass 1 (zero where eta_bar = 0)
    target: FloatArray

    @classmethod
    def build(
        cls, grid: PhaseSpaceGrid, thermostats: Sequence[ThermostatSpec]
    ) -> ThermostatWorkspace:
        """Resolve thermostat regions and Maxwellians on the grid."""
        regions: list[ThermostatRegion] = []
        eta_bar = np.zeros(grid.spatial_shape)
        weighted = np.zeros(grid.shape)
        expand = (...,) + (None,) * grid.d
        for spec in thermostats:
            mask = spec.region.contains(grid.cell_centers).reshape(grid.spatial_shape)
            maxwellian = discrete_maxwellian(spec.temperature, grid)
            regions.append(
                ThermostatRegion(
                    eta=spec.eta, temperature=spec.temperature, mask=mask, maxwellian=maxwellian
                )
            )
            rate = spec.eta * mask.astype(np.float64)
            eta_bar += rate
            weighted += rate[expand] * maxwellian
        safe = np.where(eta_bar > 0, eta_bar, 1.0)
        target = np.where(eta_bar[expand] > 0, weighted / safe[expand], 0.0)
        return cls(grid=grid, regions=regions, eta_bar=eta_bar, target=target)

    @property
    def active(self) -> bool:
        """Return if any thermostat acts anywhere."""
        return bool(np.any(self.eta_bar > 0))

    def apply(self, values: FloatArray) -> FloatArray:
        """Return sum_n eta_n 1_{Omega_n} (rho_f M_{T_n} - f)."""
        expand = (...,) + (None,) * self.grid.d
        rho = density_of(values, self.grid)
        return self.eta_bar[expand] * (rho[expand] * self.target - values)

    def relax(self, values: FloatArray, dt: float) -> FloatArray:
        """Integrate df/dt = G f exactly over dt (the density is invariant)."""
        if not self.active:
            return values
        expand = (...,) + (None,) * self.grid.d
        rho = density_of(values, self.grid)
        decay = np.exp(-self.eta_bar * dt)[expand]
        return decay * values + (1.0 - decay) * rho[expand] * self.target

    def energy_rates(self, values: FloatArray) -> list[float]:
        """Return eta_n (T_n rho_n - e_n) integrated over each region."""
        rho = density_of(values, self.grid)
        energy = cell_energy_of(values, self.grid)
        volume = self.grid.cell_volume
        return [
            float(region.eta * np.sum((region.temperature * rho - energy)[region.mask]) * volume)
            for region in self.regions
        ]


def bgk_apply(f: DistributionField, thermostats: Sequence[ThermostatSpec]) -> FloatArray:
    """Return the thermostat term G f of a field."""
    return ThermostatWorkspace.build(f.grid, thermostats).apply(f.values)
