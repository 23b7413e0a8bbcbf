"""Post-processing oracles: decay fits, the homogeneous oracle and energy budgets."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import numpy.typing as npt
import pandas as pd
from mashumaro import DataClassDictMixin
from scipy import integrate, stats

from .enums import FitStatus
from .errors import OracleError
from .helpers import write_table
from .integrator import IntegratorConfig, KineticIntegrator
from .model import FloatArray, ModelParams
from .operators import collect_outgoing, fp_apply_values, wall_energy_exchange
from .phasespace import DistributionField, density_of, energy_of

LOGGER = logging.getLogger(__name__)

# minimum number of samples and e-folds of a usable fit window
MIN_FIT_SAMPLES = 10
MIN_FIT_EFOLDS = 1.0

# radii used to extract the second moment from the small-r expansion
_ORACLE_RADII = (0.05, 0.025)


@dataclass(kw_only=True)
class DecayFitResult(DataClassDictMixin):
    """Model for an exponential fit d(t) ~ exp(intercept - rate t)."""

    rate: float = math.nan
    intercept: float = math.nan
    r_squared: float = 0.0
    # window: [t_a, t_b] of the samples used by the fit
    window: tuple[float, float] = (math.nan, math.nan)
    samples: int = 0
    status: FitStatus = FitStatus.NO_DECAY_SIGNAL


def _longest_run(mask: npt.NDArray[np.bool_]) -> tuple[int, int]:
    """Return [start, stop) of the longest run of True values."""
    best = (0, 0)
    start = None
    for idx, flag in enumerate([*mask.tolist(), False]):
        if flag and start is None:
            start = idx
        elif not flag and start is not None:
            if idx - start > best[1] - best[0]:
                best = (start, idx)
            start = None
    return best


def decay_fit(series: Sequence[tuple[float, float]], floor: float = 0.0) -> DecayFitResult:
    """Fit an exponential decay on the tail window of a (t, distance) series.

    The window holds the samples with distance in [10 floor, max / 2]; the fit is
    a least-squares line through (t, log distance).
    """
    if not series:
        return DecayFitResult()
    data = np.asarray(series, dtype=np.float64).reshape(-1, 2)
    times, distances = data[:, 0], data[:, 1]
    peak = float(np.max(distances))
    if peak <= 10.0 * floor or peak <= 0 or np.all(distances == distances[0]):
        return DecayFitResult(samples=len(times))
    mask = (distances >= 10.0 * floor) & (distances <= 0.5 * peak) & (distances > 0)
    start, stop = _longest_run(mask)
    window_t, window_d = times[start:stop], distances[start:stop]
    count = stop - start
    if count < 2:
        return DecayFitResult(samples=count, status=FitStatus.WINDOW_TOO_SHORT)
    logs = np.log(window_d)
    window = (float(window_t[0]), float(window_t[-1]))
    if count < MIN_FIT_SAMPLES or float(logs.max() - logs.min()) < MIN_FIT_EFOLDS:
        return DecayFitResult(window=window, samples=count, status=FitStatus.WINDOW_TOO_SHORT)
    fit = stats.linregress(window_t, logs)
    rate = -float(fit.slope)
    r_squared = min(1.0, max(0.0, float(fit.rvalue) ** 2))
    status = FitStatus.OK if rate > 0 else FitStatus.NO_DECAY_SIGNAL
    return DecayFitResult(
        rate=rate,
        intercept=float(fit.intercept),
        r_squared=r_squared,
        window=window,
        samples=count,
        status=status,
    )


def closed_form_steady_energy(lam: float, eta: float, temperature: float) -> float:
    """Return (2 Lambda + eta T) / (eta + 2), the homogeneous steady energy."""
    return (2.0 * lam + eta * temperature) / (eta + 2.0)


def closed_form_nu_star(alpha: float, tau: float, eta: float, temperature: float) -> float:
    """Return the homogeneous fixed point (2 (1 - alpha) tau + eta T) / (eta + 2 - 2 alpha)."""
    return (2.0 * (1.0 - alpha) * tau + eta * temperature) / (eta + 2.0 - 2.0 * alpha)


@dataclass
class OracleResult:
    """Reference values of the homogeneous steady state."""

    radii: FloatArray
    # profile: Fourier transform of the steady velocity density at radii
    profile: FloatArray
    steady_energy: float
    closed_form: float

    @property
    def relative_gap(self) -> float:
        """Return |steady_energy - closed_form| / closed_form."""
        return abs(self.steady_energy - self.closed_form) / abs(self.closed_form)


def _quad(func: Callable[[float], float], *, what: str) -> float:
    """Integrate func over [0, 1], raising OracleError when quad reports a problem."""
    result = integrate.quad(func, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200, full_output=1)
    if len(result) > 3:
        msg = f"quadrature of the {what} did not converge: {result[3]}"
        raise OracleError(msg)
    return float(result[0])


def _exponent(lam: float, eta: float, temperature: float, r: float, u: float) -> float:
    """Return the exponent of the substituted integrand w = u^(2/eta)."""
    return 0.5 * r * r * (-lam + (lam - temperature) * u ** (2.0 / eta))


def homogeneous_oracle(
    lam: float,
    eta: float,
    temperature: float,
    probe: Sequence[float] | None = None,
) -> OracleResult:
    """Return the Fourier profile and energy of the homogeneous steady state.

    The steady density of lam Delta_v f + div_v(v f) + eta (M_T - f) = 0 has
    the Fourier transform eta r^-eta e^{-lam r^2/2} int_0^r s^(eta-1)
    e^{(lam - T) s^2/2} ds, evaluated here after substituting s = r u^(1/eta).
    """
    if not lam > 0 or not temperature > 0 or eta < 0:
        msg = f"oracle needs lam > 0, T > 0 and eta >= 0, got {lam}, {temperature}, {eta}"
        raise OracleError(msg)
    radii = np.asarray(probe if probe is not None else np.linspace(0.0, 4.0, 41), dtype=float)

    def one_minus_profile(r: float) -> float:
        if eta == 0:
            return -math.expm1(-0.5 * lam * r * r)
        return -_quad(
            lambda u: math.expm1(_exponent(lam, eta, temperature, r, u)),
            what=f"profile at r={r}",
        )

    profile = np.asarray([1.0 - one_minus_profile(float(r)) for r in radii])
    # 1 - f(r) = E r^2 / 2 + O(r^4); one Richardson step removes the r^2 term
    coarse, fine = (2.0 * one_minus_profile(r) / (r * r) for r in _ORACLE_RADII)
    steady_energy = (4.0 * fine - coarse) / 3.0
    closed_form = closed_form_steady_energy(lam, eta, temperature)
    LOGGER.debug(
        "oracle: lam=%s eta=%s T=%s energy=%.10f closed form=%.10f",
        lam,
        eta,
        temperature,
        steady_energy,
        closed_form,
    )
    return OracleResult(
        radii=radii, profile=profile, steady_energy=steady_energy, closed_form=closed_form
    )


@dataclass
class BudgetEntry:
    """One mechanism of the energy budget."""

    mechanism: str
    value: float


@dataclass
class BudgetReport:
    """Energy budget dE/dt split by mechanism, checked against a finite difference."""

    entries: list[BudgetEntry] = field(default_factory=list)
    # total: sum of the mechanisms that enter dE/dt
    total: float = 0.0
    finite_difference: float = math.nan
    dt: float = math.nan

    @property
    def absolute_error(self) -> float:
        """Return |total - finite_difference|."""
        return abs(self.total - self.finite_difference)

    @property
    def relative_error(self) -> float:
        """Return the budget mismatch relative to the largest mechanism."""
        scale = max([abs(x.value) for x in self.entries] + [abs(self.finite_difference), 1e-300])
        return self.absolute_error / scale

    def value(self, mechanism: str) -> float:
        """Return the value of one mechanism."""
        for entry in self.entries:
            if entry.mechanism == mechanism:
                return entry.value
        raise KeyError(mechanism)

    def rows(self) -> list[tuple[str, float]]:
        """Return the labeled rows of the report."""
        rows = [(x.mechanism, x.value) for x in self.entries]
        rows.extend(
            [
                ("sum", self.total),
                ("finite_difference", self.finite_difference),
                ("relative_error", self.relative_error),
            ]
        )
        return rows

    def to_frame(self) -> pd.DataFrame:
        """Return the report as a (mechanism, value) table."""
        return pd.DataFrame(self.rows(), columns=["mechanism", "value"])

    def to_csv(self, path: Path | str) -> None:
        """Write the report as (mechanism, value) CSV rows."""
        write_table(self.to_frame(), path)


def moment_balance_check(
    f: DistributionField,
    params: ModelParams,
    config: IntegratorConfig | None = None,
) -> BudgetReport:
    """Return the per-mechanism energy budget of f and the finite-difference dE/dt.

    Mechanisms: Fokker-Planck, one entry per thermostat and the net wall exchange.
    The formal wall integrand and the formal Fokker-Planck moment 2 (Lambda rho - e)
    are reported beside them but do not enter the sum.
    """
    config = config or IntegratorConfig()
    integrator = KineticIntegrator(params, f.grid, config)
    grid = f.grid
    values = f.values
    diffusivity = integrator.diffusivity_for(values)
    entries: list[BudgetEntry] = []

    collision = energy_of(fp_apply_values(values, grid, diffusivity.values), grid)
    entries.append(BudgetEntry("fokker_planck", collision))
    expand = (...,) + (None,) * grid.d
    rho = density_of(values, grid)
    for idx, region in enumerate(integrator.thermostats.regions):
        term = region.eta * region.mask[expand] * (rho[expand] * region.maxwellian - values)
        entries.append(BudgetEntry(f"thermostat_{idx}", energy_of(term, grid)))
    wall = 0.0
    if integrator.wall is not None:
        wall = wall_energy_exchange(collect_outgoing(values, integrator.wall), integrator.wall)
    entries.append(BudgetEntry("boundary", wall))
    total = math.fsum(x.value for x in entries)

    lam_cells = np.asarray(diffusivity.values).reshape(grid.spatial_shape)
    formal = 2.0 * float(np.sum(lam_cells * rho) * grid.cell_volume) - 2.0 * energy_of(values, grid)
    entries.append(BudgetEntry("fokker_planck_formal", formal))
    entries.append(BudgetEntry("boundary_formal", integrator.boundary_flux_of(values)))

    dt = integrator.dt
    stepped = integrator.step_values(values, dt)
    finite_difference = (energy_of(stepped, grid) - energy_of(values, grid)) / dt
    LOGGER.debug("energy budget: sum=%.6e finite difference=%.6e", total, finite_difference)
    return BudgetReport(entries=entries, total=total, finite_difference=finite_difference, dt=dt)


def energy_ball_radius(params: ModelParams) -> float:
    """Return tau1 + sum eta_n T_n / (2 (1 - alpha)), the absorbing energy level."""
    heating = math.fsum(x.eta * x.temperature for x in params.thermostats)
    return params.tau1 + heating / (2.0 * (1.0 - params.alpha))


def energy_envelope(times: npt.ArrayLike, e0: float, params: ModelParams) -> FloatArray:
    """Return the Gronwall bound exp(-2 (1 - alpha) t) E0 + R (1 - exp(-2 (1 - alpha) t))."""
    t = np.asarray(times, dtype=np.float64)
    decay = np.exp(-2.0 * (1.0 - params.alpha) * t)
    return decay * e0 + energy_ball_radius(params) * (1.0 - decay)
