"""Tests for the decay fit, the homogeneous oracle and the energy budget."""

import math
from pathlib import Path

import numpy as np
import pytest

from kinetic_ness.analysis import (
    BudgetEntry,
    BudgetReport,
    closed_form_nu_star,
    closed_form_steady_energy,
    decay_fit,
    energy_ball_radius,
    energy_envelope,
    homogeneous_oracle,
    moment_balance_check,
)
from kinetic_ness.enums import BoundaryMode, FitStatus
from kinetic_ness.errors import OracleError
from kinetic_ness.integrator import IntegratorConfig, run_transient
from kinetic_ness.model import BoundarySpec, ModelParams
from kinetic_ness.phasespace import PhaseSpaceGrid, build_grid, project_maxwellian

from .conftest import homogeneous_params, walled_params


def test_closed_forms() -> None:
    """Test the homogeneous closed forms of the validation case."""
    assert closed_form_steady_energy(1.0, 2.0, 3.0) == pytest.approx(2.0)
    assert closed_form_nu_star(0.05, 1.0, 2.0, 3.0) == pytest.approx(7.9 / 3.9)
    assert closed_form_nu_star(0.0, 1.0, 2.0, 3.0) == closed_form_steady_energy(1.0, 2.0, 3.0)


@pytest.mark.parametrize(
    ("lam", "eta", "temperature"),
    [(1.0, 2.0, 3.0), (0.8, 0.5, 0.4), (1.0, 1.0, 1.0), (2.0, 7.0, 1.5)],
)
def test_homogeneous_oracle_matches_closed_form(
    lam: float, eta: float, temperature: float
) -> None:
    """Test the quadrature of the Fourier solution reproduces the closed-form energy."""
    result = homogeneous_oracle(lam, eta, temperature)
    assert result.profile[0] == pytest.approx(1.0)
    assert result.relative_gap <= 1e-6
    assert result.steady_energy == pytest.approx(
        closed_form_steady_energy(lam, eta, temperature), rel=1e-6
    )


def test_homogeneous_oracle_profile() -> None:
    """Test the profile without thermostat is the Gaussian exp(-lam r^2 / 2)."""
    result = homogeneous_oracle(1.5, 0.0, 4.0, probe=[0.0, 0.5, 1.0, 2.0])
    assert result.profile == pytest.approx(np.exp(-0.75 * np.square(result.radii)), rel=1e-12)
    assert result.steady_energy == pytest.approx(1.5, rel=1e-6)
    equal = homogeneous_oracle(1.0, 3.0, 1.0, probe=[1.0, 2.0])
    assert equal.profile == pytest.approx(np.exp(-0.5 * np.square(equal.radii)), rel=1e-10)


@pytest.mark.parametrize(("lam", "eta", "temperature"), [(0.0, 1.0, 1.0), (1.0, -1.0, 1.0)])
def test_homogeneous_oracle_rejects_bad_input(lam: float, eta: float, temperature: float) -> None:
    """Test invalid oracle inputs raise OracleError."""
    with pytest.raises(OracleError) as err:
        homogeneous_oracle(lam, eta, temperature)
    assert err.value.exit_code == 3


def test_decay_fit_recovers_rate() -> None:
    """Test the fit of a clean exponential."""
    series = [(t, 1e-3 * math.exp(-0.7 * t)) for t in np.linspace(0.0, 30.0, 301)]
    fit = decay_fit(series, floor=1e-12)
    assert fit.status == FitStatus.OK
    assert fit.rate == pytest.approx(0.7, rel=1e-9)
    assert fit.r_squared >= 0.999
    assert fit.window[0] == pytest.approx(1.0)
    assert fit.samples > 100


def test_decay_fit_window_respects_floor() -> None:
    """Test samples at the noise floor are left out of the window."""
    series = [(t, max(math.exp(-t), 1e-6)) for t in np.linspace(0.0, 20.0, 201)]
    fit = decay_fit(series, floor=1e-6)
    assert fit.status == FitStatus.OK
    assert fit.rate == pytest.approx(1.0, rel=1e-9)
    assert fit.window[1] <= -math.log(1e-5) + 1e-9


def test_decay_fit_failure_statuses() -> None:
    """Test the statuses of unusable series."""
    assert decay_fit([]).status == FitStatus.NO_DECAY_SIGNAL
    flat = [(float(t), 1e-3) for t in range(20)]
    assert decay_fit(flat).status == FitStatus.NO_DECAY_SIGNAL
    short = [(float(t), math.exp(-t)) for t in range(4)]
    assert decay_fit(short).status == FitStatus.WINDOW_TOO_SHORT
    shallow = [(t, 1.0 - 0.01 * t) for t in np.linspace(0.0, 60.0, 100)]
    assert decay_fit(shallow).status == FitStatus.WINDOW_TOO_SHORT
    growing = [(float(t), math.exp(0.1 * t)) for t in range(40)]
    assert decay_fit(growing).status != FitStatus.OK
    assert decay_fit(flat, floor=1.0).status == FitStatus.NO_DECAY_SIGNAL


def test_energy_ball() -> None:
    """Test the absorbing ball radius and the envelope."""
    params = homogeneous_params(alpha=0.05)
    radius = 1.0 + 2.0 * 3.0 / (2.0 * 0.95)
    assert energy_ball_radius(params) == pytest.approx(radius)
    envelope = energy_envelope([0.0, 1e6], 5.0, params)
    assert envelope.tolist() == pytest.approx([5.0, radius])


def test_budget_report_rows(tmp_path: Path) -> None:
    """Test the budget report rows and CSV layout."""
    report = BudgetReport(
        entries=[BudgetEntry("fokker_planck", -1.0), BudgetEntry("thermostat_0", 1.5)],
        total=0.5,
        finite_difference=0.49,
        dt=0.01,
    )
    assert report.value("thermostat_0") == 1.5
    with pytest.raises(KeyError):
        report.value("boundary")
    assert report.absolute_error == pytest.approx(0.01)
    assert report.relative_error == pytest.approx(0.01 / 1.5)
    names = [name for name, _ in report.rows()]
    assert names[-3:] == ["sum", "finite_difference", "relative_error"]
    path = tmp_path / "budget.csv"
    report.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "mechanism,value"
    assert lines[1] == "fokker_planck,-1"


def test_moment_balance_with_walls(walled_grid: PhaseSpaceGrid) -> None:
    """Test the mechanism sum matches the finite-difference dE/dt mid transient."""
    params = walled_params(alpha=0.05, iota=0.5)
    dt = 0.1 * walled_grid.dx / walled_grid.v_max
    config = IntegratorConfig(dt=dt, t_final=0.2)
    rho = np.linspace(0.6, 1.4, walled_grid.nx)
    f0 = project_maxwellian(rho, 0.6, walled_grid, renormalize=True)
    state = run_transient(f0, params, config).final
    report = moment_balance_check(state, params, config)
    assert report.dt == dt
    assert report.value("boundary") != 0.0
    assert report.relative_error <= 0.05
    summed = ("fokker_planck", "thermostat_0", "thermostat_1", "boundary")
    assert report.total == pytest.approx(math.fsum(report.value(x) for x in summed))


def test_moment_balance_homogeneous() -> None:
    """Test the budget of the homogeneous case: no wall term, formal and discrete FP agree."""
    grid = build_grid(1, 2, 64, 8.0 * math.sqrt(3.0))
    params = homogeneous_params()
    f = project_maxwellian(1.0, 1.0, grid, renormalize=True)
    report = moment_balance_check(f, params, IntegratorConfig(dt=0.005))
    assert report.value("boundary") == 0.0
    assert report.value("fokker_planck") == pytest.approx(
        report.value("fokker_planck_formal"), abs=1e-6
    )
    # (2 Lambda + eta T) - (2 + eta) E at E = 1
    assert report.total == pytest.approx(4.0, rel=1e-3)
    assert report.relative_error <= 0.05


@pytest.mark.parametrize("nv", [128, 256])
def test_moment_balance_away_from_equilibrium(nv: int) -> None:
    """Test the Fokker-Planck moment of a hot homogeneous gas is 2 (Lambda - E0) mass."""
    grid = build_grid(1, 2, nv, 8.0 * math.sqrt(3.0))
    params = ModelParams(boundary=BoundarySpec(mode=BoundaryMode.PERIODIC))
    f = project_maxwellian(1.0, 3.0, grid, renormalize=True)
    report = moment_balance_check(f, params, IntegratorConfig(dt=1e-4))
    expected = 2.0 * (1.0 - 3.0)
    assert report.value("fokker_planck_formal") == pytest.approx(expected, rel=1e-6)
    assert report.value("fokker_planck") == pytest.approx(expected, abs=8.0 * grid.dv**2)
    assert report.value("boundary") == 0.0
    assert report.total == report.value("fokker_planck")
    assert report.relative_error <= 0.01
