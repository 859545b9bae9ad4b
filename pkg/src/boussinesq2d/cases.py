"""
The twelve two-viscosity / one-diffusivity configurations and the axis-swap symmetry.

Swapping ``x <-> y`` together with the velocity components maps a solution of
one configuration onto a solution of the configuration with rows
``(nu_yy, nu_yx | kappa_y), (nu_xy, nu_xx | kappa_x)`` and buoyancy ``(F2, F1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from boussinesq2d import spectral
from boussinesq2d.errors import BlowUpError, ConfigurationError
from boussinesq2d.model import State, ViscosityMatrix, resolve_dt, step
from boussinesq2d.runner import fixed_step_plan

# rows: (nu_xx, nu_xy | kappa_x), (nu_yx, nu_yy | kappa_y)
CASE_ROWS = {
    1: ((1, 0, 1), (1, 0, 0)),
    2: ((0, 1, 0), (0, 1, 1)),
    3: ((0, 0, 0), (1, 1, 1)),
    4: ((0, 0, 1), (1, 1, 0)),
    5: ((0, 1, 1), (1, 0, 0)),
    6: ((0, 1, 0), (1, 0, 1)),
    7: ((1, 1, 1), (0, 0, 0)),
    8: ((0, 1, 1), (0, 1, 0)),
    9: ((1, 0, 0), (1, 0, 1)),
    10: ((1, 1, 0), (0, 0, 1)),
    11: ((1, 0, 1), (0, 1, 0)),
    12: ((1, 0, 0), (0, 1, 1)),
}


def parse_case_id(text):
    """``"case7"`` -> 7, ``"custom"`` -> ``"custom"``."""
    if isinstance(text, int):
        n = text
    else:
        s = str(text).strip().lower()
        if s == "custom":
            return "custom"
        if not s.startswith("case") or not s[4:].isdigit():
            raise ConfigurationError(f"case id must be 'case1'..'case12' or 'custom', got {text!r}")
        n = int(s[4:])
    if n not in CASE_ROWS:
        raise ConfigurationError(f"case number must be in 1..12, got {n}")
    return n


def case_label(case_id):
    return "custom" if case_id == "custom" else f"case{case_id}"


def case_matrix(case_id, row_scales=(1.0, 1.0), custom=None):
    """The 0/1 matrix of a numbered case, each row optionally scaled.

    Raises:
        ConfigurationError: for ``"custom"`` without an explicit matrix, or a
            non-positive row scale.
    """
    cid = parse_case_id(case_id)
    if cid == "custom":
        if custom is None:
            raise ConfigurationError("custom case requires an explicit viscosity matrix")
        return custom
    sx, sy = (float(s) for s in row_scales)
    if not (sx > 0 and sy > 0):
        raise ConfigurationError("row scales must be positive")
    rx, ry = CASE_ROWS[cid]
    return ViscosityMatrix.from_rows(tuple(sx * v for v in rx), tuple(sy * v for v in ry))


def identify_case(visc):
    """Case number matching the activity pattern of ``visc``, or ``None``."""
    pat = visc.pattern()
    for n, rows in CASE_ROWS.items():
        if rows == pat:
            return n
    return None


def reflect_config(visc, F):
    """Parameters of the axis-swapped problem."""
    swapped = ViscosityMatrix.from_rows(
        (visc.nu_yy, visc.nu_yx, visc.kappa_y),
        (visc.nu_xy, visc.nu_xx, visc.kappa_x),
    )
    return swapped, F.swapped()


def reflect_state(s):
    """``U^x(x, y) = u^y(y, x)``, ``U^y(x, y) = u^x(y, x)``, ``Theta(x, y) = theta(y, x)``.

    Implemented as a transpose of the coefficient arrays, an exact permutation
    equivalent to transposing the collocation samples.

    Raises:
        ConfigurationError: on a non-square grid.
    """
    g = s.grid
    if not g.is_square:
        raise ConfigurationError("reflection requires a square grid (nx == ny and Lx == Ly)")
    cx, cy, ct = s.coeff_arrays()
    u = spectral.VectorField.from_coeffs(
        g, np.ascontiguousarray(cy.T), np.ascontiguousarray(cx.T),
        solenoidal=s.u.solenoidal, dealiased=s.u.dealiased,
    )
    th = spectral.SpectralField(g, np.ascontiguousarray(ct.T), s.theta.dealiased)
    return State(u, th, s.t)


def state_norm(s):
    return float(np.sqrt(spectral.norm(s.u) ** 2 + spectral.norm(s.theta) ** 2))


def state_distance(a, b):
    g = a.grid
    return float(np.sqrt(g.area * sum(
        np.sum(np.abs(x - y) ** 2) for x, y in zip(a.coeff_arrays(), b.coeff_arrays())
    )))


@dataclass
class SymmetryReport:
    tol: float
    times: list = field(default_factory=list)
    deviations: list = field(default_factory=list)
    aborted: bool = False
    error: str = ""

    @property
    def max_deviation(self):
        return max(self.deviations, default=0.0)

    @property
    def passed(self):
        return not self.aborted and self.max_deviation <= self.tol


def verify_symmetry(cfg, T=None, tol=1e-8, initial_state=None):
    """Run the original and the reflected problem side by side.

    Returns the relative L2 deviation ``||reflect(s(t)) - s~(t)|| / ||s(0)||``
    at every sample. Both runs use the same step sequence.
    """
    grid = cfg.build_grid()
    if not grid.is_square:
        raise ConfigurationError("symmetry check requires a square grid")
    visc, F, stepper = cfg.build_viscosity(), cfg.build_buoyancy(), cfg.stepper
    rvisc, rF = reflect_config(visc, F)
    s = initial_state if initial_state is not None else cfg.build_state()
    r = reflect_state(s)
    t_end = cfg.t_final if T is None else T
    scale = state_norm(s)

    report = SymmetryReport(tol)

    def sample():
        dev = state_distance(reflect_state(s), r)
        report.times.append(s.t)
        report.deviations.append(dev / scale if scale > 0 else dev)

    sample()
    fixed = stepper.dt != "auto"
    if fixed:
        n_steps, dt = fixed_step_plan(s.t, t_end, float(stepper.dt))
    i = 0
    try:
        while (i < n_steps) if fixed else (t_end - s.t > 1e-12 * max(1.0, t_end)):
            h = dt if fixed else min(resolve_dt(s, stepper), t_end - s.t)
            s = step(s, visc, F, stepper, dt=h)
            r = step(r, rvisc, rF, stepper, dt=h)
            i += 1
            last = (fixed and i == n_steps) or (not fixed and t_end - s.t <= 1e-12 * max(1.0, t_end))
            if i % cfg.cadence == 0 or last:
                sample()
    except BlowUpError as exc:
        report.aborted = True
        report.error = str(exc)
    return report
