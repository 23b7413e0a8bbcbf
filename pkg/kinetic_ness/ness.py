"""Steady states: linear steady states, the energy map and the nonlinear fixed point."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import DecayFitResult, decay_fit
from .constants import (
    ALPHA_BUDGET,
    CLIP_TOLERANCE,
    DEFAULT_MAX_OUTER,
    DEFAULT_THETA,
    DEFAULT_TOL_FP,
    INTERVAL_MARGIN,
)
from .enums import EnergyMode, RegimeFlag, StabilityMode
from .errors import ConvergenceError, FixedPointError, PerturbationError, ValidationError
from .helpers import resolve_thread_count
from .integrator import IntegratorConfig, KineticIntegrator, RunTrace
from .model import (
    DiffusivityProfile,
    FloatArray,
    ModelParams,
    StrictModel,
    effective_diffusivity,
    ensure_valid,
)
from .operators import velocity_laplacian
from .phasespace import (
    DistributionField,
    PhaseSpaceGrid,
    discrete_maxwellian,
    energy_of,
    mass_of,
    project_maxwellian,
)

LOGGER = logging.getLogger(__name__)

# step cap of a steady-state solve when the caller does not set one
DEFAULT_STEADY_MAX_STEPS = 200_000


@dataclass
class SteadyStateResult:
    """A converged steady field with its diagnostics."""

    field: DistributionField
    energy: float
    mass: float
    # residual: ||f_{n+1} - f_n||_{L2_w} / dt at termination
    residual: float
    steps: int
    lambda_used: DiffusivityProfile
    # iterations: outer fixed-point iterations that produced this state (0 for linear solves)
    iterations: int = 0
    # trace: diagnostics of the run that produced the state
    trace: RunTrace | None = None


@dataclass(kw_only=True)
class NessSettings(StrictModel):
    """Model for the settings of the nonlinear fixed-point solve."""

    tol_fp: float = DEFAULT_TOL_FP
    # theta: damping of nu_{k+1} = (1 - theta) nu_k + theta F(nu_k)
    theta: float = DEFAULT_THETA
    max_outer: int = DEFAULT_MAX_OUTER
    alpha_budget: float = ALPHA_BUDGET
    # interval_margin: relative slack on the invariant interval [0, 2 E0]
    interval_margin: float = INTERVAL_MARGIN
    # probe_points: size of the nu grid sampled by the continuity probe (0 disables it)
    probe_points: int = 0
    # polish: relax the frozen solution under the self-consistent dynamics
    polish: bool = True

    def problems(self) -> list[str]:
        """Return the violated constraints of these settings."""
        errors: list[str] = []
        if not self.tol_fp > 0:
            errors.append("ness.tol_fp: tol_fp must be > 0")
        if not 0 < self.theta <= 1:
            errors.append(f"ness.theta: theta outside (0, 1], got {self.theta}")
        if self.max_outer < 1:
            errors.append("ness.max_outer: max_outer must be >= 1")
        if not 0 < self.alpha_budget < 0.5:
            errors.append("ness.alpha_budget: alpha_budget outside (0, 1/2)")
        if self.interval_margin < 0:
            errors.append("ness.interval_margin: interval_margin must be >= 0")
        if self.probe_points < 0:
            errors.append("ness.probe_points: probe_points must be >= 0")
        return errors


@dataclass
class FixedPointState:
    """Progress of the outer iteration nu -> F(nu)."""

    nu: float
    theta: float
    # history: evaluated pairs (nu_k, F(nu_k))
    history: list[tuple[float, float]] = field(default_factory=list)
    converged: bool = False
    # bracket: (nu with F - nu > 0, nu with F - nu < 0) once a sign change is seen
    bracket: tuple[float, float] | None = None
    # f_nu: F(nu) of the last evaluation
    f_nu: float = math.nan

    @property
    def iterations(self) -> int:
        """Return the number of F evaluations."""
        return len(self.history)

    @property
    def residual(self) -> float:
        """Return |F(nu) - nu| of the last evaluation."""
        if not self.history:
            return math.inf
        nu, value = self.history[-1]
        return abs(value - nu)

    def record(self, nu: float, value: float) -> None:
        """Store one evaluation and update the sign-change bracket."""
        self.history.append((nu, value))
        self.nu, self.f_nu = nu, value
        above = [x for x, y in self.history if y - x > 0]
        below = [x for x, y in self.history if y - x < 0]
        if self.bracket is not None:
            low, high = self.bracket
            self.bracket = (nu, high) if value - nu > 0 else (low, nu)
        elif above and below:
            self.bracket = (above[-1], below[-1])

    def next_nu(self) -> float:
        """Return the next iterate: damped step, or bisection once bracketed."""
        if self.bracket is not None:
            return 0.5 * (self.bracket[0] + self.bracket[1])
        return (1.0 - self.theta) * self.nu + self.theta * self.f_nu


@dataclass
class NessResult:
    """Outcome of the nonlinear steady-state solve."""

    nu_star: float
    steady: SteadyStateResult
    # baseline: the linear (alpha = 0) steady state and its energy E0
    baseline: SteadyStateResult
    state: FixedPointState
    regime_flag: RegimeFlag

    @property
    def e0(self) -> float:
        """Return the energy of the alpha = 0 steady state."""
        return self.baseline.energy


@dataclass
class ProbeResult:
    """Samples of the energy map on a nu grid."""

    nus: list[float]
    values: list[float]
    e0: float
    upper: float
    # lipschitz: largest difference quotient between neighbouring samples
    lipschitz: float

    @property
    def interval_preserved(self) -> bool:
        """Return if every sample lies inside [0, upper]."""
        return all(0.0 <= x <= self.upper for x in self.values)


def _tau_values(params: ModelParams, grid: PhaseSpaceGrid) -> FloatArray:
    return params.tau.evaluate(grid.cell_centers).reshape(grid.spatial_shape)


def _steady_config(config: IntegratorConfig, diffusivity: DiffusivityProfile) -> IntegratorConfig:
    """Return the frozen-coefficient config of a steady solve."""
    return replace(
        config,
        energy_mode=EnergyMode.FROZEN,
        diffusivity=diffusivity,
        t_final=math.inf,
        stop_at_steady=True,
        max_steps=config.max_steps or DEFAULT_STEADY_MAX_STEPS,
    )


def _finish_steady(trace: RunTrace, lambda_used: DiffusivityProfile) -> SteadyStateResult:
    """Check convergence of a steady run and renormalize its field to mass 1."""
    if not trace.steady_reached:
        msg = (
            f"no steady state after {trace.steps} steps "
            f"(increment {trace.last_increment:.3e})"
        )
        raise ConvergenceError(msg, residual=trace.last_increment)
    grid = trace.final.grid
    values = trace.final.values / mass_of(trace.final.values, grid)
    field_ = DistributionField(values=values, grid=grid, t=trace.final.t)
    return SteadyStateResult(
        field=field_,
        energy=energy_of(values, grid),
        mass=mass_of(values, grid),
        residual=trace.last_increment,
        steps=trace.steps,
        lambda_used=lambda_used,
        trace=trace,
    )


def linear_steady(
    params: ModelParams,
    diffusivity: DiffusivityProfile,
    grid: PhaseSpaceGrid,
    config: IntegratorConfig | None = None,
    initial: DistributionField | None = None,
) -> SteadyStateResult:
    """Return the steady state of the linear equation with a frozen diffusivity.

    The run starts from the uniform Maxwellian at the mean of tau (or from
    initial, used to warm start repeated solves) and stops on steady detection.
    """
    ensure_valid(params)
    config = _steady_config(config or IntegratorConfig(), diffusivity)
    integrator = KineticIntegrator(params, grid, config)
    if initial is None:
        mean_tau = float(np.mean(integrator.tau_values))
        initial = project_maxwellian(1.0, mean_tau, grid, renormalize=True)
    trace = integrator.run_transient(initial)
    result = _finish_steady(trace, diffusivity)
    LOGGER.debug(
        "linear steady state: energy=%.8f after %d steps (Lambda in [%.4g, %.4g])",
        result.energy,
        result.steps,
        diffusivity.lower,
        diffusivity.upper,
    )
    return result


def _steady_for_nu(
    params: ModelParams,
    nu: float,
    grid: PhaseSpaceGrid,
    config: IntegratorConfig | None,
    initial: DistributionField | None,
) -> SteadyStateResult:
    diffusivity = effective_diffusivity(params.alpha, nu, _tau_values(params, grid))
    return linear_steady(params, diffusivity, grid, config, initial)


def map_F(  # noqa: N802
    params: ModelParams,
    nu: float,
    grid: PhaseSpaceGrid,
    config: IntegratorConfig | None = None,
    initial: DistributionField | None = None,
) -> float:
    """Return F(nu), the steady energy for Lambda = alpha nu + (1 - alpha) tau."""
    if nu < 0:
        raise ValidationError([f"nu: nu must be >= 0, got {nu}"])
    return _steady_for_nu(params, nu, grid, config, initial).energy


def regime_flag(alpha: float, alpha_budget: float = ALPHA_BUDGET) -> RegimeFlag:
    """Return if alpha lies inside the small-nonlinearity regime."""
    if alpha > alpha_budget:
        return RegimeFlag.OUTSIDE_PROVEN_REGIME
    return RegimeFlag.WITHIN_PROVEN_REGIME


def _polish(
    params: ModelParams,
    grid: PhaseSpaceGrid,
    config: IntegratorConfig,
    start: SteadyStateResult,
) -> SteadyStateResult:
    """Relax a frozen steady state under the self-consistent dynamics."""
    polish_config = replace(
        config,
        energy_mode=EnergyMode.SELF_CONSISTENT,
        diffusivity=None,
        t_final=math.inf,
        stop_at_steady=True,
        max_steps=config.max_steps or DEFAULT_STEADY_MAX_STEPS,
    )
    integrator = KineticIntegrator(params, grid, polish_config)
    trace = integrator.run_transient(start.field)
    lambda_used = integrator.diffusivity_for(trace.final.values)
    return _finish_steady(trace, lambda_used)


def fixed_point_ness(
    params: ModelParams,
    grid: PhaseSpaceGrid,
    config: IntegratorConfig | None = None,
    settings: NessSettings | None = None,
) -> NessResult:
    """Solve nu = F(nu) and return nu* with the nonlinear steady state.

    Damped iteration from nu_0 = E0, switching to bisection on F(nu) - nu
    once two evaluations have opposite signs. Every F value must stay in
    [0, 2 E0 (1 + margin)].
    """
    ensure_valid(params)
    settings = settings or NessSettings()
    if errors := settings.problems():
        raise ValidationError(errors)
    config = config or IntegratorConfig()
    inner = replace(config, record_every=0)
    flag = regime_flag(params.alpha, settings.alpha_budget)
    if flag == RegimeFlag.OUTSIDE_PROVEN_REGIME:
        LOGGER.warning(
            "alpha=%s exceeds the budget %s: %s", params.alpha, settings.alpha_budget, flag
        )

    baseline = linear_steady(
        params, DiffusivityProfile.from_values(_tau_values(params, grid)), grid, inner
    )
    e0 = baseline.energy
    upper = 2.0 * e0 * (1.0 + settings.interval_margin)
    state = FixedPointState(nu=e0, theta=settings.theta)
    nu = e0
    warm = baseline.field
    steady: SteadyStateResult | None = None
    for _ in range(settings.max_outer):
        steady = _steady_for_nu(params, nu, grid, inner, warm)
        value = steady.energy
        if not 0.0 <= value <= upper:
            msg = f"F({nu:.6g}) = {value:.6g} left the interval [0, {upper:.6g}]"
            raise FixedPointError(msg)
        state.record(nu, value)
        warm = steady.field
        LOGGER.debug("fixed point: nu=%.10f F(nu)=%.10f", nu, value)
        if abs(value - nu) <= settings.tol_fp * max(1.0, nu):
            state.converged = True
            break
        nu = state.next_nu()
        if not 0.0 <= nu <= upper:
            msg = f"iterate nu={nu:.6g} left the interval [0, {upper:.6g}]"
            raise FixedPointError(msg)
    if not state.converged or steady is None:
        msg = (
            f"no fixed point after {settings.max_outer} iterations "
            f"(residual {state.residual:.3e})"
        )
        raise FixedPointError(msg)

    if settings.polish and params.alpha > 0:
        steady = _polish(params, grid, config, steady)
    nu_star = steady.energy if settings.polish else state.nu
    steady.iterations = state.iterations
    LOGGER.info(
        "fixed point nu*=%.10f after %d iterations (E0=%.10f, %s)",
        nu_star,
        state.iterations,
        e0,
        flag,
    )
    return NessResult(
        nu_star=nu_star, steady=steady, baseline=baseline, state=state, regime_flag=flag
    )


def probe_map_F(  # noqa: N802
    params: ModelParams,
    grid: PhaseSpaceGrid,
    config: IntegratorConfig | None = None,
    points: int = 5,
    e0: float | None = None,
    margin: float = INTERVAL_MARGIN,
) -> ProbeResult:
    """Sample F on an even nu grid over [0, 2 E0], concurrently when threads are configured."""
    if points < 2:
        raise ValidationError([f"probe_points: need at least 2 points, got {points}"])
    config = replace(config or IntegratorConfig(), record_every=0)
    if e0 is None:
        e0 = linear_steady(
            params, DiffusivityProfile.from_values(_tau_values(params, grid)), grid, config
        ).energy
    nus = [float(x) for x in np.linspace(0.0, 2.0 * e0, points)]
    workers = resolve_thread_count()

    def evaluate(nu: float) -> float:
        return map_F(params, nu, grid, config)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            values = list(executor.map(evaluate, nus))
    else:
        values = [evaluate(nu) for nu in nus]
    quotients = [
        abs(values[i + 1] - values[i]) / (nus[i + 1] - nus[i]) for i in range(len(nus) - 1)
    ]
    LOGGER.debug("probe of F over %d points with %d workers", points, workers)
    return ProbeResult(
        nus=nus,
        values=values,
        e0=e0,
        upper=2.0 * e0 * (1.0 + margin),
        lipschitz=max(quotients, default=0.0),
    )


@dataclass(kw_only=True)
class StabilitySettings(StrictModel):
    """Model for the perturbation experiment around a steady state."""

    amplitude: float = 1e-3
    t_final: float = 20.0
    mode: StabilityMode = StabilityMode.NONLINEAR
    # hot_factor/cold_factor: temperatures of the bump M_hot - M_cold relative to E
    hot_factor: float = 1.5
    cold_factor: float = 0.75
    record_every: int = 5

    def problems(self) -> list[str]:
        """Return the violated constraints of these settings."""
        errors: list[str] = []
        if not math.isfinite(self.amplitude):
            errors.append("stability.amplitude: amplitude must be finite")
        if not self.t_final >= 0:
            errors.append("stability.t_final: t_final must be >= 0")
        if not (self.hot_factor > 0 and self.cold_factor > 0):
            errors.append("stability.hot_factor: bump temperatures must be > 0")
        if self.record_every < 0:
            errors.append("stability.record_every: record_every must be >= 0")
        return errors


def perturbation_bump(ness: SteadyStateResult, settings: StabilitySettings) -> FloatArray:
    """Return the mass-zero bump amplitude (M_hot - M_cold), identical in every cell."""
    grid = ness.field.grid
    reference = max(ness.energy, np.finfo(float).tiny)
    hot = discrete_maxwellian(settings.hot_factor * reference, grid)
    cold = discrete_maxwellian(settings.cold_factor * reference, grid)
    shape = settings.amplitude * (hot - cold)
    return np.broadcast_to(shape, grid.shape).copy()


def perturbed_state(ness: SteadyStateResult, settings: StabilitySettings) -> DistributionField:
    """Return the steady field plus the bump, clipped at zero and mass-corrected."""
    grid = ness.field.grid
    values = ness.field.values + perturbation_bump(ness, settings)
    negative = -float(np.sum(values[values < 0])) * grid.phase_volume
    target = mass_of(ness.field.values, grid)
    if negative > CLIP_TOLERANCE * target:
        msg = f"perturbation leaves negative mass {negative:.3e} after clipping"
        raise PerturbationError(msg)
    if negative > 0:
        LOGGER.warning("perturbation clipped (negative mass %.3e)", negative)
        values = np.clip(values, 0.0, None)
        values *= target / mass_of(values, grid)
    return DistributionField(values=values, grid=grid)


def stability_experiment(
    params: ModelParams,
    ness: SteadyStateResult,
    settings: StabilitySettings | None = None,
    config: IntegratorConfig | None = None,
) -> tuple[RunTrace, DecayFitResult]:
    """Perturb a steady state, evolve it and fit the decay of the weighted distance.

    The nonlinear mode evolves f = steady + bump under the self-consistent
    dynamics. The linearized mode evolves the signed bump h with the frozen
    diffusivity of the steady state plus the energy-coupling source
    alpha E_h Delta_v steady.
    """
    ensure_valid(params)
    settings = settings or StabilitySettings()
    if errors := settings.problems():
        raise ValidationError(errors)
    config = config or IntegratorConfig()
    grid = ness.field.grid
    run_config = replace(
        config,
        t_final=settings.t_final,
        record_every=settings.record_every,
        stop_at_steady=True,
        max_steps=None,
        renormalize=False,
    )
    if settings.mode == StabilityMode.NONLINEAR:
        run_config = replace(run_config, energy_mode=EnergyMode.SELF_CONSISTENT, diffusivity=None)
        integrator = KineticIntegrator(params, grid, run_config)
        trace = integrator.run_transient(perturbed_state(ness, settings), reference=ness.field)
    else:
        frozen = effective_diffusivity(params.alpha, ness.energy, _tau_values(params, grid))
        run_config = replace(run_config, energy_mode=EnergyMode.FROZEN, diffusivity=frozen)
        source = velocity_laplacian(ness.field.values, grid)
        alpha = params.alpha

        def forcing(values: FloatArray) -> FloatArray:
            return alpha * energy_of(values, grid) * source

        integrator = KineticIntegrator(params, grid, run_config, forcing=forcing)
        start = DistributionField(values=perturbation_bump(ness, settings), grid=grid, signed=True)
        zero = DistributionField(values=np.zeros(grid.shape), grid=grid, signed=True)
        trace = integrator.run_transient(start, reference=zero)
    floor = max(config.steady_tol, np.finfo(float).eps * float(np.max(np.abs(ness.field.values))))
    fit = decay_fit(trace.distance_series(), floor=floor)
    LOGGER.info(
        "stability (%s): rate=%.4g r2=%.5f status=%s",
        settings.mode,
        fit.rate,
        fit.r_squared,
        fit.status,
    )
    return trace, fit
