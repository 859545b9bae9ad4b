"""
Executable versions of the a priori estimates.

Energy budgets are checked as residuals of exact identities, boundedness
statements as ceilings on sampled norms, and the uniqueness argument as a
two-trajectory experiment compared against its exponential envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from boussinesq2d import spectral
from boussinesq2d.errors import BlowUpError, ConfigurationError
from boussinesq2d.initial import random_theta
from boussinesq2d.model import State, buoyancy_samples, resolve_dt, step
from boussinesq2d.runner import fixed_step_plan
from boussinesq2d.spectral import fft2, ifft2

GROWTH_SLOPE_THRESHOLD = 1.5


@dataclass(frozen=True)
class ResidualReport:
    name: str
    times: tuple
    residuals: tuple
    interval_residuals: tuple
    scale: float

    @property
    def max_abs(self):
        return max((abs(r) for r in self.residuals), default=0.0)

    @property
    def max_interval(self):
        return max((abs(r) for r in self.interval_residuals), default=0.0)


def theta_dissipation(rec, visc, key="integrals"):
    src = getattr(rec, key)
    return visc.kappa_x * src["dx_theta_L2_sq"] + visc.kappa_y * src["dy_theta_L2_sq"]


def velocity_dissipation(rec, visc, key="integrals"):
    src = getattr(rec, key)
    return (visc.nu_xx * src["dx_ux_L2_sq"] + visc.nu_xy * src["dy_ux_L2_sq"]
            + visc.nu_yx * src["dx_uy_L2_sq"] + visc.nu_yy * src["dy_uy_L2_sq"])


def _residual_report(name, history, quantity, scale):
    if len(history) < 2:
        raise ConfigurationError("budget checks need at least two records")
    q = [quantity(r) for r in history]
    s = scale if scale > 0 else 1.0
    cumulative = tuple((v - q[0]) / s for v in q)
    intervals = tuple((b - a) / s for a, b in zip(q, q[1:]))
    return ResidualReport(name, tuple(r.t for r in history), cumulative, intervals, scale)


def check_theta_energy(history, visc):
    """Residual of ``||theta||^2 + 2 int (kx ||d_x theta||^2 + ky ||d_y theta||^2) = const``.

    Residuals are relative to ``||theta_0||^2``.
    """
    return _residual_report(
        "theta_energy",
        history,
        lambda r: r.theta_L2**2 + 2.0 * theta_dissipation(r, visc),
        history[0].theta_L2**2,
    )


def check_velocity_energy(history, visc):
    """Residual of ``||u||^2 + 2 int sum nu_ij ||d_j u^i||^2 - 2 int (F(theta), u) = const``.

    The scale is the largest of ``||u||^2`` over the run and twice the total
    dissipated energy.
    """
    scale = max(max(r.u_L2**2 for r in history), 2.0 * velocity_dissipation(history[-1], visc))
    return _residual_report(
        "velocity_energy",
        history,
        lambda r: r.u_L2**2 + 2.0 * velocity_dissipation(r, visc) - 2.0 * r.integrals["work"],
        scale,
    )


def kinetic_energy_nonincreasing(history, rtol=1e-12):
    e = [r.u_L2**2 for r in history]
    return all(b <= a * (1.0 + rtol) for a, b in zip(e, e[1:]))


@dataclass(frozen=True)
class FEquationReport:
    residual_L2: float
    scale: float

    @property
    def relative(self):
        return self.residual_L2 / self.scale if self.scale > 0 else 0.0


def check_F_equation(state, visc, F):
    """Pointwise residual of the transport-diffusion equation satisfied by ``F(theta)``.

    ``d_t F + u.grad F - kx d_xx F - ky d_yy F + F''(theta) (kx (d_x theta)^2 + ky (d_y theta)^2)``
    with ``d_t F = F'(theta) d_t theta`` and ``d_t theta`` taken from the
    temperature equation evaluated pointwise. Both components are checked and
    the combined L2 norm is reported.
    """
    g = state.grid
    cx, cy, ct = state.coeff_arrays()
    mx, my = g.multiplier("x", 1), g.multiplier("y", 1)
    mxx, myy = g.multiplier("x", 2), g.multiplier("y", 2)
    ux, uy, th, tx, ty, txx, tyy = ifft2(
        np.stack([cx, cy, ct, mx * ct, my * ct, mxx * ct, myy * ct])
    ).real
    theta_t = -(ux * tx + uy * ty) + visc.kappa_x * txx + visc.kappa_y * tyy
    fs = buoyancy_samples(th, F)
    grad_sq = visc.kappa_x * tx**2 + visc.kappa_y * ty**2

    res_sq = 0.0
    scale_sq = 0.0
    for comp in ("1", "2"):
        Fv, dF, d2F = fs["F" + comp], fs["dF" + comp], fs["d2F" + comp]
        Fh = fft2(Fv)
        Fx, Fy, Fxx, Fyy = ifft2(np.stack([mx * Fh, my * Fh, mxx * Fh, myy * Fh])).real
        terms = [
            dF * theta_t,
            ux * Fx + uy * Fy,
            -(visc.kappa_x * Fxx + visc.kappa_y * Fyy),
            d2F * grad_sq,
        ]
        res = sum(terms)
        res_sq += np.sum(res**2)
        scale_sq += sum(np.sum(t**2) for t in terms)
    area = g.cell_area
    return FEquationReport(float(np.sqrt(res_sq * area)), float(np.sqrt(scale_sq * area)))


CRITERION_INTEGRANDS = {
    10: ("dx_uy_L2_sq_crit", "dx_theta_L2_sq"),
    11: ("dx_uy_L2_sq_crit", "dx_theta_L2_sq"),
    12: ("dy_ux_L2_sq_crit", "dy_theta_L2_sq"),
}


@dataclass(frozen=True)
class CriterionStatus:
    case_id: object
    integrals: dict
    slopes: dict
    flags: dict
    rule: str = f"heuristic: log-log slope of running integral above {GROWTH_SLOPE_THRESHOLD} => growing"


def _loglog_slope(ts, vals):
    pts = [(t, v) for t, v in zip(ts, vals) if t > 0 and v > 0]
    pts = pts[len(pts) // 2:]
    if len(pts) < 2:
        return 0.0
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    if np.ptp(x) == 0:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def monitor_criteria(history, case_id):
    """Running integrals of the quantities in the conditional regularity criteria.

    Cases 10 and 11 watch ``int ||d_x u^y||^2`` and ``int ||d_x theta||^2``;
    case 12 watches ``int ||d_y u^x||^2`` and ``int ||d_y theta||^2``. Other
    cases report all four. Purely observational.
    """
    if not history:
        raise ConfigurationError("monitor_criteria needs a nonempty history")
    names = CRITERION_INTEGRANDS.get(
        case_id, ("dx_uy_L2_sq_crit", "dx_theta_L2_sq", "dy_ux_L2_sq_crit", "dy_theta_L2_sq")
    )
    ts = [r.t - history[0].t for r in history]
    integrals, slopes, flags = {}, {}, {}
    for n in names:
        vals = [r.integrals.get(n, 0.0) - history[0].integrals.get(n, 0.0) for r in history]
        integrals[n] = vals[-1]
        slopes[n] = _loglog_slope(ts, vals)
        flags[n] = "growing" if slopes[n] > GROWTH_SLOPE_THRESHOLD else "bounded-so-far"
    return CriterionStatus(case_id, integrals, slopes, flags)


# quantities whose boundedness is asserted (cases 7-9) or reported (others)
CASE_BOUND_INTEGRALS = {
    7: ("dxy_w_L2_sq", "dyy_w_L2_sq", "lap_dx_theta_L2_sq"),
    8: ("dxy_w_L2_sq", "dyy_w_L2_sq", "lap_dx_theta_L2_sq"),
    9: ("dxy_w_L2_sq", "dxx_w_L2_sq", "lap_dy_theta_L2_sq"),
    10: ("dxy_w_L2_sq", "dyy_w_L2_sq", "lap_dy_theta_L2_sq"),
    11: ("dxy_w_L2_sq", "lap_dx_theta_L2_sq"),
    12: ("dxy_w_L2_sq", "lap_dy_theta_L2_sq"),
}
UNCONDITIONAL_CASES = (7, 8, 9)


@dataclass(frozen=True)
class BoundsReport:
    case_id: object
    max_norms: dict
    ceilings: dict
    integrals: dict
    asserted: bool
    passed: bool
    violations: tuple = ()


def check_case_bounds(history, case_id, ceiling_factor=1e6):
    """Compare the H2 norms and dissipation integrals against ceilings.

    Ceilings are ``ceiling_factor`` times the initial value of each norm.
    Only cases 7, 8 and 9 are asserted; the others are reported.
    """
    first = history[0]
    max_norms = {
        "u_H2": max(r.u_H2 for r in history),
        "theta_H2": max(r.theta_H2 for r in history),
    }
    ceilings = {
        "u_H2": ceiling_factor * first.u_H2,
        "theta_H2": ceiling_factor * first.theta_H2,
    }
    names = CASE_BOUND_INTEGRALS.get(case_id, ())
    integrals = {n: history[-1].integrals.get(n, 0.0) - first.integrals.get(n, 0.0) for n in names}
    violations = [k for k in max_norms if not max_norms[k] <= ceilings[k]]
    violations += [k for k, v in integrals.items() if not math.isfinite(v)]
    asserted = case_id in UNCONDITIONAL_CASES
    return BoundsReport(case_id, max_norms, ceilings, integrals, asserted,
                        passed=not violations, violations=tuple(violations))


@dataclass
class GronwallReport:
    perturbation_size: float
    times: list = field(default_factory=list)
    diff_sq: list = field(default_factory=list)
    envelope: list = field(default_factory=list)
    safety: float = 1.1
    aborted: bool = False
    error: str = ""

    @property
    def ratios(self):
        return [d / e if e > 0 else 0.0 for d, e in zip(self.diff_sq, self.envelope)]

    @property
    def passed(self):
        ok = all(d <= self.safety * e for d, e in zip(self.diff_sq, self.envelope))
        return ok and not self.aborted

    @property
    def final_difference(self):
        return math.sqrt(self.diff_sq[-1]) if self.diff_sq else 0.0

    @property
    def tightness(self):
        """Largest ``diff_sq / envelope`` after the initial sample (which is 1 by construction)."""
        return max(self.ratios[1:], default=0.0)


def theta_perturbation(grid, size, seed, n_max=4):
    """Band-limited temperature perturbation with L2 norm ``size``."""
    if size == 0:
        return np.zeros(grid.shape, np.complex128)
    shape = random_theta(grid, 1.0, seed + 1000, n_max=n_max)
    return shape.coeffs * (size / spectral.norm(shape))


def _diff_sq(a, b):
    g = a.grid
    return g.area * sum(
        float(np.sum(np.abs(x - y) ** 2)) for x, y in zip(a.coeff_arrays(), b.coeff_arrays())
    )


def _grad_linf_sum(state):
    g = state.grid
    cx, cy, ct = state.coeff_arrays()
    mx, my = g.multiplier("x", 1), g.multiplier("y", 1)
    d = ifft2(np.stack([mx * cx, my * cx, mx * cy, my * cy, mx * ct, my * ct])).real
    gu = np.sqrt(np.max(d[0] ** 2 + d[1] ** 2 + d[2] ** 2 + d[3] ** 2))
    gt = np.sqrt(np.max(d[4] ** 2 + d[5] ** 2))
    return float(gu + gt)


def stability_experiment(cfg, perturbation_size, t_final=None, safety=1.1, constant=1.0,
                         initial_state=None):
    """Evolve a base and a temperature-perturbed solution in lockstep.

    At every sample the squared difference ``||U||^2 + ||Theta||^2`` is compared
    with ``constant * exp(int_0^t (||grad u||_inf + ||grad theta||_inf) ds)``
    times its initial value, the gradients taken from the base run and
    integrated by the trapezoid rule at the sampling cadence.
    """
    if perturbation_size < 0:
        raise ConfigurationError("perturbation_size must be nonnegative")
    grid = cfg.build_grid()
    visc, F, stepper = cfg.build_viscosity(), cfg.build_buoyancy(), cfg.stepper
    base = initial_state if initial_state is not None else cfg.build_state()
    cx, cy, ct = base.coeff_arrays()
    # both trajectories go through the same constructor so a zero perturbation is bit-exact
    base = State.from_coeffs(grid, cx, cy, ct, base.t)
    pert = State.from_coeffs(grid, cx, cy, ct + theta_perturbation(grid, perturbation_size, cfg.seed), base.t)
    t_end = cfg.t_final if t_final is None else t_final

    report = GronwallReport(perturbation_size, safety=safety)
    d0 = _diff_sq(base, pert)
    rate_prev = _grad_linf_sum(base)
    integral = 0.0
    t_prev = base.t

    def sample(a, b):
        nonlocal rate_prev, integral, t_prev
        rate = _grad_linf_sum(a)
        integral += 0.5 * (a.t - t_prev) * (rate + rate_prev)
        rate_prev, t_prev = rate, a.t
        report.times.append(a.t)
        report.diff_sq.append(_diff_sq(a, b))
        report.envelope.append(constant * math.exp(integral) * d0)

    report.times.append(base.t)
    report.diff_sq.append(d0)
    report.envelope.append(constant * d0)

    fixed = stepper.dt != "auto"
    if fixed:
        n_steps, dt = fixed_step_plan(base.t, t_end, float(stepper.dt))
    a, b = base, pert
    i = 0
    try:
        while (i < n_steps) if fixed else (t_end - a.t > 1e-12 * max(1.0, t_end)):
            h = dt if fixed else min(resolve_dt(a, stepper), t_end - a.t)
            a = step(a, visc, F, stepper, dt=h)
            b = step(b, visc, F, stepper, dt=h)
            i += 1
            last = (fixed and i == n_steps) or (not fixed and t_end - a.t <= 1e-12 * max(1.0, t_end))
            if i % cfg.cadence == 0 or last:
                sample(a, b)
    except BlowUpError as exc:
        report.aborted = True
        report.error = str(exc)
    return report
