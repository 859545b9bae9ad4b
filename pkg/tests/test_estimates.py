import math

import numpy as np
import pytest

from boussinesq2d import spectral
from boussinesq2d.config import RunConfig
from boussinesq2d.diagnostics import INTEGRANDS, BudgetLedger, record
from boussinesq2d.errors import ConfigurationError
from boussinesq2d.estimates import (
    CRITERION_INTEGRANDS,
    check_case_bounds,
    check_F_equation,
    check_theta_energy,
    check_velocity_energy,
    kinetic_energy_nonincreasing,
    monitor_criteria,
    stability_experiment,
    theta_perturbation,
)
from boussinesq2d.initial import make_state
from boussinesq2d.model import State, StepperConfig, ViscosityMatrix, buoyancy_law
from boussinesq2d.runner import simulate
from boussinesq2d.spectral import Grid

CASE7 = ViscosityMatrix.from_rows((1, 1, 1), (0, 0, 0))
CASE11 = ViscosityMatrix.from_rows((1, 0, 1), (0, 1, 0))


@pytest.fixture(scope="module")
def grid():
    return Grid(32, 32)


@pytest.fixture(scope="module")
def short_run(grid):
    s0 = make_state(grid, seed=2)
    return simulate(s0, CASE7, buoyancy_law("canonical"), StepperConfig(dt=2e-3), 0.2, cadence=5)


class TestLedger:
    def test_exact_for_pure_diffusion(self, grid):
        X, Y = grid.coords
        s0 = State.from_physical(grid, 0 * X, 0 * X, np.cos(2 * X + Y))
        cfg = StepperConfig(dt=0.05, advect=False)
        res = simulate(s0, CASE7, buoyancy_law("none"), cfg, 1.0, cadence=100)
        lam = 4.0  # kappa_x * kx^2, kappa_y = 0
        e0 = 4.0 * spectral.norm(s0.theta) ** 2  # ||d_x theta_0||^2
        exact = e0 * (1 - math.exp(-2 * lam)) / (2 * lam)
        assert res.ledger.integrals["dx_theta_L2_sq"] == pytest.approx(exact, rel=1e-13)
        assert res.ledger.integrals["dy_theta_L2_sq"] == pytest.approx(exact / 4, rel=1e-13)

    def test_zero_state(self, grid):
        rec = record(State.zeros(grid), CASE7, buoyancy_law("canonical"))
        assert rec.theta_L2 == 0 and rec.u_L2 == 0 and rec.M_empirical == 1.0
        assert all(v == 0 for v in rec.dissipation.values())

    def test_integrals_monotone(self, short_run):
        hist = short_run.history
        for name in INTEGRANDS:
            vals = [r.integrals[name] for r in hist]
            assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_initial_seed(self, grid):
        s0 = make_state(grid, seed=1)
        led = BudgetLedger(s0, buoyancy_law("canonical"), {"work": 2.0, "dx_theta_L2_sq": 1.0, "bogus": 5})
        assert led.integrals["work"] == 2.0 and "bogus" not in led.integrals


class TestRecord:
    def test_consistency(self, grid):
        s = make_state(grid, seed=3)
        rec = record(s, CASE7, buoyancy_law("canonical"), lp=(2, 4))
        assert rec.theta_Lp[2.0] == pytest.approx(rec.theta_L2, rel=1e-12)
        assert rec.F_L2 == pytest.approx(rec.theta_L2, rel=1e-12)
        assert rec.w_L2 == pytest.approx(spectral.norm(s.u, "grad"), rel=1e-12)
        assert rec.theta_Linf == pytest.approx(np.max(np.abs(s.theta.physical())))
        assert rec.dissipation["dx_uy_L2_sq_crit"] == rec.dissipation["dx_uy_L2_sq"]
        th = s.theta.physical()
        assert rec.M_empirical == pytest.approx(np.max(np.abs(th)) + 1.0)


class TestBudgets:
    def test_theta_budget(self, short_run):
        rep = check_theta_energy(short_run.history, CASE7)
        assert rep.max_abs < 1e-5
        assert rep.residuals[0] == 0

    def test_velocity_budget(self, short_run):
        rep = check_velocity_energy(short_run.history, CASE7)
        assert rep.max_abs < 1e-5

    def test_budget_needs_two_records(self, short_run):
        with pytest.raises(ConfigurationError):
            check_theta_energy(short_run.history[:1], CASE7)

    def test_kinetic_energy_decays_without_buoyancy(self, grid):
        s0 = make_state(grid, seed=4, theta="zero")
        res = simulate(s0, CASE11, buoyancy_law("canonical"), StepperConfig(dt=2e-3), 0.2, cadence=2)
        assert kinetic_energy_nonincreasing(res.history)
        e = [r.u_L2 for r in res.history]
        assert e[-1] < e[0]

    def test_detects_growth(self):
        class R:
            def __init__(self, u):
                self.u_L2 = u
        assert not kinetic_energy_nonincreasing([R(1.0), R(1.0 + 1e-9)])


class TestFEquation:
    @pytest.mark.parametrize("law", ["canonical", "nonlinear-demo"])
    def test_residual_small(self, law):
        s = make_state(Grid(64, 64), seed=1)
        rep = check_F_equation(s, ViscosityMatrix(1, 1, 0, 0, 1, 0.5), buoyancy_law(law))
        assert rep.relative < 1e-11


class TestCriteria:
    def test_case_specific_integrands(self, grid):
        s0 = make_state(grid, seed=5)
        visc = ViscosityMatrix.from_rows((1, 1, 0), (0, 0, 1))
        res = simulate(s0, visc, buoyancy_law("canonical"), StepperConfig(dt=2e-3), 0.1, cadence=5)
        status = monitor_criteria(res.history, 10)
        assert set(status.integrals) == set(CRITERION_INTEGRANDS[10])
        assert all(v > 0 for v in status.integrals.values())
        assert set(status.flags.values()) <= {"growing", "bounded-so-far"}
        generic = monitor_criteria(res.history, 7)
        assert len(generic.integrals) == 4

    def test_empty(self):
        with pytest.raises(ConfigurationError):
            monitor_criteria([], 10)

    def test_bounds(self, short_run):
        rep = check_case_bounds(short_run.history, 7)
        assert rep.asserted and rep.passed
        assert set(rep.integrals) == {"dxy_w_L2_sq", "dyy_w_L2_sq", "lap_dx_theta_L2_sq"}
        assert not check_case_bounds(short_run.history, 11).asserted


class TestStability:
    CFG = RunConfig(nx=32, ny=32, t_final=0.1, stepper=StepperConfig(dt=2e-3), cadence=5)

    def test_zero_perturbation(self):
        rep = stability_experiment(self.CFG, 0.0)
        assert rep.passed and rep.final_difference <= 1e-11

    def test_perturbation_norm(self, grid):
        c = theta_perturbation(grid, 1e-3, seed=1)
        assert math.sqrt(grid.area * np.sum(np.abs(c) ** 2)) == pytest.approx(1e-3, rel=1e-12)

    def test_small_perturbation_within_envelope(self):
        rep = stability_experiment(self.CFG, 1e-6)
        assert rep.passed
        assert 0 < rep.tightness <= 1.1
        assert rep.times[0] == 0 and rep.times[-1] == pytest.approx(0.1)

    def test_negative_rejected(self):
        with pytest.raises(ConfigurationError):
            stability_experiment(self.CFG, -1.0)
