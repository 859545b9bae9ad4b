"""Acceptance suite at the reference scale (128^2, T <= 1).

Each test reports a single PASS/FAIL line; the lines are repeated in the
terminal summary. The full module takes a few minutes.
"""

import math

import numpy as np
import pytest

from boussinesq2d.cases import state_distance, verify_symmetry
from boussinesq2d.cli import main, read_csv_rows
from boussinesq2d.config import RunConfig
from boussinesq2d.estimates import (
    check_case_bounds,
    check_theta_energy,
    check_velocity_energy,
    kinetic_energy_nonincreasing,
    stability_experiment,
)
from boussinesq2d.inequalities import run_identity_checks, run_inequalities
from boussinesq2d.model import StepperConfig
from boussinesq2d.runner import simulate
from boussinesq2d.snapshot import Snapshot

pytestmark = pytest.mark.acceptance

REF = dict(nx=128, ny=128, t_final=1.0, stepper=StepperConfig(dt=1e-3), cadence=10, seed=1)


def run(cfg):
    return simulate(cfg.build_state(), cfg.build_viscosity(), cfg.build_buoyancy(), cfg.stepper,
                    cfg.t_final, cfg.cadence, cfg.lp)


@pytest.fixture(scope="module")
def case_runs():
    return {n: run(RunConfig(case_id=n, **REF)) for n in range(1, 13)}


def test_1_maximum_principle(case_runs, acceptance_log):
    worst_linf, worst_l2 = 0.0, 0.0
    for res in case_runs.values():
        h = res.history
        worst_linf = max(worst_linf, max(r.theta_Linf for r in h))
        worst_l2 = max(worst_l2, max(r.theta_L2 for r in h) / h[0].theta_L2 - 1.0)
    ok = acceptance_log(1, worst_linf <= 1 + 1e-3 and worst_l2 <= 1e-6,
                        f"max ||theta||_inf = {worst_linf:.6f}, max L2 growth = {worst_l2:.2e} (12 cases)")
    assert ok


def test_2_theta_energy_identity(case_runs, acceptance_log):
    visc = RunConfig(case_id=7).build_viscosity()
    residuals = {}
    for dt in (2e-3, 1e-3, 5e-4):
        if dt == 1e-3:
            res = case_runs[7]
        else:
            res = run(RunConfig(case_id=7, **{**REF, "stepper": StepperConfig(dt=dt)}))
        residuals[dt] = check_theta_energy(res.history, visc).max_abs
    r = [residuals[dt] for dt in (2e-3, 1e-3, 5e-4)]
    orders = [math.log2(a / b) for a, b in zip(r, r[1:])]
    ok = acceptance_log(2, r[1] <= 1e-4 and min(orders) >= 1.9,
                        f"residual {r[1]:.2e} at dt=1e-3, orders {orders[0]:.3f}, {orders[1]:.3f}")
    assert ok


def test_3_velocity_energy_identity(case_runs, acceptance_log):
    visc = RunConfig(case_id=7).build_viscosity()
    resid = check_velocity_energy(case_runs[7].history, visc).max_abs
    dry = run(RunConfig(case_id=7, theta="zero", **REF))
    mono = kinetic_energy_nonincreasing(dry.history, rtol=0.0)
    ok = acceptance_log(3, resid <= 1e-4 and mono,
                        f"residual {resid:.2e}, kinetic energy nonincreasing with theta0=0: {mono}")
    assert ok


def test_4_unconditional_boundedness(case_runs, acceptance_log):
    details, ok = [], True
    for n in (7, 8, 9):
        h = case_runs[n].history
        rep = check_case_bounds(h, n, ceiling_factor=1e3)
        integral = h[-1].integrals["dxy_w_L2_sq"] + h[-1].integrals["dyy_w_L2_sq"]
        done = h[-1].t == pytest.approx(1.0)
        ok &= rep.passed and math.isfinite(integral) and done
        growth = max(rep.max_norms[k] / (rep.ceilings[k] / 1e3) for k in rep.max_norms)
        details.append(f"case{n}: H2 growth {growth:.3f}, integral {integral:.3e}")
    assert acceptance_log(4, ok, "; ".join(details))


def test_5_symmetry(acceptance_log):
    rep = verify_symmetry(RunConfig(case_id=7, **REF), T=0.5)
    ok = acceptance_log(5, rep.passed and rep.max_deviation <= 1e-8,
                        f"max relative deviation {rep.max_deviation:.2e} to T=0.5")
    assert ok


def test_6_gronwall_stability(acceptance_log):
    cfg = RunConfig(case_id=7, **{**REF, "t_final": 0.5})
    full = stability_experiment(cfg, 1e-6)
    half = stability_experiment(cfg, 5e-7)
    ratio = full.final_difference / half.final_difference
    ok = acceptance_log(6, full.passed and half.passed and abs(ratio - 2) <= 0.2,
                        f"tightness {full.tightness:.3f}, halving ratio {ratio:.6f}")
    assert ok


def test_7_exact_identities(acceptance_log):
    reports = run_inequalities(100, 64, 0)
    p2 = [r for r in reports if r.id.endswith("_p2")]
    ids = run_identity_checks(100, 64, 0)
    worst_p2 = max(abs(r.max_ratio - 1) for r in p2)
    worst_id = max(r.max_ratio for r in ids)
    ok = acceptance_log(7, len(p2) == 2 and worst_p2 <= 1e-10 and worst_id <= 1e-10,
                        f"p=2 ratio error {worst_p2:.1e}, identity residual {worst_id:.1e}")
    assert ok


def test_8_inequality_stability(acceptance_log):
    lo = run_inequalities(1000, 64, 0)
    hi = run_inequalities(1000, 128, 0)
    again = run_inequalities(1000, 64, 0)
    finite = all(math.isfinite(r.max_ratio) for r in lo + hi)
    spread = max(abs(a.max_ratio - b.max_ratio) / max(a.max_ratio, b.max_ratio) for a, b in zip(lo, hi))
    identical = [(r.id, r.max_ratio, r.argmax_seed, r.skips) for r in lo] == \
        [(r.id, r.max_ratio, r.argmax_seed, r.skips) for r in again]
    ok = acceptance_log(8, finite and spread <= 0.2 and identical,
                        f"max 64/128 relative spread {spread:.2e}, repeat bit-identical: {identical}")
    assert ok


def test_9_mollifier_consistency(case_runs, acceptance_log):
    full = case_runs[7].state
    dist = []
    for radius in (16, 32):
        cfg = RunConfig(case_id=7, **{**REF, "stepper": StepperConfig(dt=1e-3, mollification_eps=1 / radius)})
        dist.append(state_distance(run(cfg).state, full))
    ok = acceptance_log(9, dist[1] < dist[0] and np.all(np.isfinite(dist)),
                        f"||s_eps - s||: radius 16 -> {dist[0]:.3e}, radius 32 -> {dist[1]:.3e}")
    assert ok


CONFIG_TEXT = """\
case = case7
grid.nx = 128
grid.ny = 128
stepper.dt = 1e-3
initial.seed = 1
run.t_final = {t}
run.cadence = 10
"""


def test_10_determinism_and_resume(tmp_path, acceptance_log):
    for name, t in (("full.txt", 1.0), ("half.txt", 0.5)):
        (tmp_path / name).write_text(CONFIG_TEXT.format(t=t))
    codes = [
        main(["run", "--config", str(tmp_path / "full.txt"), "--out", str(tmp_path / "a")]),
        main(["run", "--config", str(tmp_path / "full.txt"), "--out", str(tmp_path / "b")]),
        main(["run", "--config", str(tmp_path / "half.txt"), "--out", str(tmp_path / "c")]),
        main(["resume", str(tmp_path / "c" / "final.absq"), "--set", "run.t_final=1.0"]),
    ]
    same_csv = (tmp_path / "a" / "diagnostics.csv").read_bytes() == (tmp_path / "b" / "diagnostics.csv").read_bytes()
    a = Snapshot.load(tmp_path / "a" / "final.absq")
    c = Snapshot.load(tmp_path / "c" / "final.absq")
    state_dev = max(float(np.max(np.abs(x - y))) for x, y in ((a.ux, c.ux), (a.uy, c.uy), (a.theta, c.theta)))
    ra = read_csv_rows(tmp_path / "a" / "diagnostics.csv")
    rc = read_csv_rows(tmp_path / "c" / "diagnostics.csv")
    csv_dev = max(
        abs(x[k] - y[k]) / max(1.0, abs(x[k])) for x, y in zip(ra, rc) for k in x
    ) if len(ra) == len(rc) else math.inf
    ok = acceptance_log(10, codes == [0, 0, 0, 0] and same_csv and state_dev <= 1e-12 and csv_dev <= 1e-12,
                        f"CSV bit-identical: {same_csv}, resume state deviation {state_dev:.1e}, "
                        f"CSV deviation {csv_dev:.1e}")
    assert ok
