"""
Per-sample diagnostics and cumulative dissipation integrals.

Every dissipation integrand is a weighted sum over Fourier modes of either
the temperature energy ``|theta_k|^2`` or a velocity energy ``|u^x_k|^2``,
``|u^y_k|^2``. :class:`BudgetLedger` integrates them in time mode by mode with
the exponential (logarithmic-mean) trapezoid rule

    int_{t0}^{t1} E_k dt ~= (t1 - t0) * (E0 - E1) / ln(E0 / E1),

which is exact for a mode decaying under pure diffusion and reduces to the
ordinary trapezoid rule when ``E0 ~= E1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from boussinesq2d import spectral
from boussinesq2d.errors import BlowUpError
from boussinesq2d.model import buoyancy_samples
from boussinesq2d.spectral import ifft2, lp_norm_samples

# name -> (energy source, derivative pattern on that source)
# sources: "t" = |theta_k|^2, "x" = |u^x_k|^2, "y" = |u^y_k|^2, "w" = |w_k|^2
INTEGRANDS = {
    "dx_theta_L2_sq": ("t", "dx"),
    "dy_theta_L2_sq": ("t", "dy"),
    "dx_ux_L2_sq": ("x", "dx"),
    "dy_ux_L2_sq": ("x", "dy"),
    "dx_uy_L2_sq": ("y", "dx"),
    "dy_uy_L2_sq": ("y", "dy"),
    "dxx_w_L2_sq": ("w", "dxx"),
    "dxy_w_L2_sq": ("w", "dxy"),
    "dyy_w_L2_sq": ("w", "dyy"),
    "lap_dx_theta_L2_sq": ("t", "lap_dx"),
    "lap_dy_theta_L2_sq": ("t", "lap_dy"),
    "dx_uy_L2_sq_crit": ("y", "dx"),
    "dy_ux_L2_sq_crit": ("x", "dy"),
}

SCALAR_COLUMNS = (
    "theta_L2", "theta_Linf", "u_L2", "F_L2", "w_L2",
    "grad_theta_L2", "grad_w_L2", "lap_theta_L2",
)


def _mode_energies(state):
    cx, cy, ct = state.coeff_arrays()
    g = state.grid
    ex = np.abs(cx) ** 2
    ey = np.abs(cy) ** 2
    w = g.kx_odd * cy - g.ky_odd * cx
    return {"t": np.abs(ct) ** 2, "x": ex, "y": ey, "w": np.abs(w) ** 2}


def _log_mean(a, b):
    """Elementwise logarithmic mean, falling back to the arithmetic mean."""
    out = 0.5 * (a + b)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = a / b
        usable = (a > 0) & (b > 0) & (np.abs(ratio - 1.0) > 1e-6)
        lr = np.log(ratio, where=usable, out=np.zeros_like(a))
        out = np.where(usable, (a - b) / np.where(usable, lr, 1.0), out)
    return out


def work_rate(state, F):
    """Buoyancy work ``(F(theta), u)`` by collocation quadrature."""
    cx, cy, ct = state.coeff_arrays()
    ux, uy, th = ifft2(np.stack([cx, cy, ct])).real
    f = buoyancy_samples(th, F)
    return float(np.sum(f["F1"] * ux + f["F2"] * uy) * state.grid.cell_area)


class BudgetLedger:
    """Cumulative time integrals of every dissipation integrand and of the work rate.

    Call :meth:`update` after every accepted step; integrals never decrease
    except ``work``, which is signed.
    """

    def __init__(self, state, F, initial=None):
        self.grid = state.grid
        self.F = F
        self.t = state.t
        self._energies = _mode_energies(state)
        self._work = work_rate(state, F)
        self._weights = {
            name: self.grid.seminorm_weight(pattern) for name, (_, pattern) in INTEGRANDS.items()
        }
        self.integrals = {name: 0.0 for name in INTEGRANDS}
        self.integrals["work"] = 0.0
        if initial:
            for k, v in initial.items():
                if k in self.integrals:
                    self.integrals[k] = float(v)

    @property
    def work(self):
        return self._work

    def update(self, state):
        with np.errstate(over="ignore", invalid="ignore"):
            self._update(state)

    def _update(self, state):
        h = state.t - self.t
        new = _mode_energies(state)
        area = self.grid.area
        means = {src: _log_mean(self._energies[src], new[src]) for src in new}
        for name, (src, _) in INTEGRANDS.items():
            self.integrals[name] += h * area * float(np.sum(self._weights[name] * means[src]))
        work = work_rate(state, self.F)
        self.integrals["work"] += 0.5 * h * (self._work + work)
        self._energies, self._work, self.t = new, work, state.t

    def snapshot(self):
        return dict(self.integrals)


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One time sample of norms, dissipation integrands and running integrals."""

    t: float
    theta_L2: float
    theta_Linf: float
    theta_Lp: dict
    u_L2: float
    F_L2: float
    w_L2: float
    grad_theta_L2: float
    grad_w_L2: float
    lap_theta_L2: float
    u_H2: float
    theta_H2: float
    grad_u_Linf: float
    grad_theta_Linf: float
    theta_mean: float
    work: float
    dissipation: dict
    integrals: dict
    M_empirical: float
    F_max: dict = field(default_factory=dict)

    def is_finite(self):
        vals = [getattr(self, n) for n in SCALAR_COLUMNS] + [
            self.u_H2, self.theta_H2, self.M_empirical, self.work
        ]
        vals += list(self.dissipation.values()) + list(self.theta_Lp.values())
        return all(math.isfinite(v) for v in vals)


def _h2(f):
    return math.sqrt(spectral.norm(f) ** 2 + spectral.norm(f, "grad") ** 2 + spectral.norm(f, "hess") ** 2)


def record(state, visc, F, lp=(4,), integrals=None, work=None):
    """Build a :class:`DiagnosticsRecord` from ``state``.

    Raises:
        BlowUpError: if any computed quantity is non-finite.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        rec = _record(state, visc, F, lp, integrals, work)
    if not rec.is_finite():
        raise BlowUpError(state.t, None, f"non-finite diagnostics at t={state.t:.6g}")
    return rec


def _record(state, visc, F, lp, integrals, work):
    g = state.grid
    cx, cy, ct = state.coeff_arrays()
    mx = g.multiplier("x", 1)
    my = g.multiplier("y", 1)
    phys = ifft2(np.stack([cx, cy, ct, mx * cx, my * cx, mx * cy, my * cy, mx * ct, my * ct])).real
    th = phys[2]
    fs = buoyancy_samples(th, F)

    w = spectral.vorticity(state.u) if spectral.divergence_residual(state.u) <= spectral.SOLENOIDAL_TOL else None
    w_field = w if w is not None else spectral.SpectralField(g, 1j * (g.kx_odd * cy - g.ky_odd * cx))
    area = g.area
    energies = _mode_energies(state)
    dissipation = {
        name: float(area * np.sum(g.seminorm_weight(pattern) * energies[src]))
        for name, (src, pattern) in INTEGRANDS.items()
    }
    M = float(np.max(
        np.abs(fs["F1"]) + np.abs(fs["F2"]) + np.abs(fs["dF1"]) + np.abs(fs["dF2"])
        + np.abs(fs["d2F1"]) + np.abs(fs["d2F2"])
    ))
    if work is None:
        work = float(np.sum(fs["F1"] * phys[0] + fs["F2"] * phys[1]) * g.cell_area)
    return DiagnosticsRecord(
        t=float(state.t),
        theta_L2=spectral.norm(state.theta),
        theta_Linf=float(np.max(np.abs(th))),
        theta_Lp={float(p): lp_norm_samples([th], g, float(p)) for p in lp},
        u_L2=spectral.norm(state.u),
        F_L2=lp_norm_samples([fs["F1"], fs["F2"]], g, 2.0),
        w_L2=spectral.norm(w_field),
        grad_theta_L2=spectral.norm(state.theta, "grad"),
        grad_w_L2=spectral.norm(w_field, "grad"),
        lap_theta_L2=spectral.norm(state.theta, "lap"),
        u_H2=math.sqrt(_h2(state.u.x) ** 2 + _h2(state.u.y) ** 2),
        theta_H2=_h2(state.theta),
        grad_u_Linf=float(np.sqrt(np.max(phys[3] ** 2 + phys[4] ** 2 + phys[5] ** 2 + phys[6] ** 2))),
        grad_theta_Linf=float(np.sqrt(np.max(phys[7] ** 2 + phys[8] ** 2))),
        theta_mean=float(ct[0, 0].real),
        work=float(work),
        dissipation=dissipation,
        integrals=dict(integrals) if integrals is not None else {},
        M_empirical=M,
        F_max={k: float(np.max(np.abs(v))) for k, v in fs.items()},
    )
