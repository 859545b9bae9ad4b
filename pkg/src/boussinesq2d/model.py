"""
Anisotropic Boussinesq dynamics on the periodic box.

The prognostic variables are the spectral coefficients of a divergence-free
velocity ``u = (u^x, u^y)`` and a temperature ``theta``. Pressure is never
stored; it is removed by the Leray projector and can be rebuilt with
:func:`recover_pressure`.

Diffusion is integrated exactly per Fourier mode. On the divergence-free
subspace spanned by ``e = (-k_y, k_x)/|k|`` the projected anisotropic
operator ``P diag(D_x, D_y)`` acts as the scalar

    lambda_u(k) = (d_x(k) k_y^2 + d_y(k) k_x^2) / |k|^2,
    d_x = nu_xx k_x^2 + nu_xy k_y^2,   d_y = nu_yx k_x^2 + nu_yy k_y^2,

so the integrating factor commutes with the projection for every viscosity
matrix. Advection and buoyancy are explicit (Lawson / integrating-factor
Euler or midpoint).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from boussinesq2d import spectral
from boussinesq2d.errors import BlowUpError, BuoyancyEvaluationError, ConfigurationError
from boussinesq2d.spectral import SpectralField, VectorField, fft2, ifft2

SCHEMES = ("imex_euler", "imex_rk2")


@dataclass(frozen=True)
class ViscosityMatrix:
    """The six nonnegative coefficients ``(nu_xx, nu_xy | kappa_x; nu_yx, nu_yy | kappa_y)``."""

    nu_xx: float = 0.0
    nu_xy: float = 0.0
    nu_yx: float = 0.0
    nu_yy: float = 0.0
    kappa_x: float = 0.0
    kappa_y: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = float(getattr(self, f.name))
            if not math.isfinite(v) or v < 0:
                raise ConfigurationError(f"{f.name} must be a finite nonnegative real, got {v}")
            object.__setattr__(self, f.name, v)

    @classmethod
    def from_rows(cls, row_x, row_y):
        (a, b, c), (d, e, f) = row_x, row_y
        return cls(a, b, d, e, c, f)

    def rows(self):
        return (
            (self.nu_xx, self.nu_xy, self.kappa_x),
            (self.nu_yx, self.nu_yy, self.kappa_y),
        )

    def pattern(self):
        """0/1 activity pattern of the matrix, row by row."""
        return tuple(tuple(int(v > 0) for v in row) for row in self.rows())

    def is_case(self, n):
        from boussinesq2d.cases import CASE_ROWS

        if n not in CASE_ROWS:
            raise ConfigurationError(f"case number must be in 1..12, got {n}")
        return self.pattern() == CASE_ROWS[n]

    def __str__(self):
        (a, b, c), (d, e, f) = self.rows()
        return f"({a:g}, {b:g} | {c:g}), ({d:g}, {e:g} | {f:g})"


@dataclass(frozen=True)
class BuoyancyLaw:
    """Buoyancy ``F(theta) = (F1(theta), F2(theta))`` with two derivatives.

    All callables act elementwise on numpy arrays.
    """

    name: str
    F1: Callable
    F2: Callable
    dF1: Callable
    dF2: Callable
    d2F1: Callable
    d2F2: Callable

    def __post_init__(self):
        zero = np.zeros(1)
        for fn in (self.F1, self.F2):
            if np.asarray(fn(zero)).item() != 0.0:
                raise ConfigurationError(f"buoyancy law {self.name!r} must satisfy F(0) = 0")

    def swapped(self):
        """Law with components exchanged, ``(F2, F1)``."""
        suffix = "-swapped"
        name = self.name[: -len(suffix)] if self.name.endswith(suffix) else self.name + suffix
        return BuoyancyLaw(name, self.F2, self.F1, self.dF2, self.dF1, self.d2F2, self.d2F1)


def _zero(t):
    return np.zeros_like(t)


def _one(t):
    return np.ones_like(t)


def _ident(t):
    return np.array(t, dtype=float, copy=True)


def _cubic(t):
    return t + t**3 / 3.0


def _dcubic(t):
    return 1.0 + t**2


def _d2cubic(t):
    return 2.0 * t


def _neg_sin(t):
    return -np.sin(t)


_BASE_LAWS = {
    "canonical": lambda: BuoyancyLaw("canonical", _zero, _ident, _zero, _one, _zero, _zero),
    "nonlinear-demo": lambda: BuoyancyLaw(
        "nonlinear-demo", np.sin, _cubic, np.cos, _dcubic, _neg_sin, _d2cubic
    ),
    "none": lambda: BuoyancyLaw("none", _zero, _zero, _zero, _zero, _zero, _zero),
}

BUOYANCY_LAWS = tuple(_BASE_LAWS)


def buoyancy_law(name):
    """Look up a built-in law; a ``-swapped`` suffix exchanges the components."""
    if name.endswith("-swapped"):
        return buoyancy_law(name[: -len("-swapped")]).swapped()
    try:
        return _BASE_LAWS[name]()
    except KeyError:
        raise ConfigurationError(
            f"unknown buoyancy law {name!r}; expected one of {sorted(_BASE_LAWS)}"
        ) from None


@dataclass(frozen=True, eq=False)
class State:
    """Divergence-free velocity and temperature at time ``t``."""

    u: VectorField
    theta: SpectralField
    t: float = 0.0

    def __post_init__(self):
        if self.u.grid != self.theta.grid:
            raise ConfigurationError("velocity and temperature live on different grids")

    @property
    def grid(self):
        return self.theta.grid

    @classmethod
    def zeros(cls, grid, t=0.0):
        return cls(VectorField.zeros(grid), SpectralField.zeros(grid), t)

    @classmethod
    def from_coeffs(cls, grid, cx, cy, ct, t=0.0):
        """Wrap coefficient arrays after projecting and dealiasing them."""
        mask = grid.dealias_mask
        cx, cy = spectral.project_coeffs(grid, cx * mask, cy * mask)
        u = VectorField.from_coeffs(grid, cx, cy, solenoidal=True, dealiased=True)
        return cls(u, SpectralField(grid, ct * mask, dealiased=True), float(t))

    @classmethod
    def from_physical(cls, grid, ux, uy, theta, t=0.0):
        return cls.from_coeffs(grid, fft2(np.asarray(ux, float)), fft2(np.asarray(uy, float)),
                               fft2(np.asarray(theta, float)), t)

    def physical(self):
        """Physical samples ``(u^x, u^y, theta)``."""
        return (
            spectral.transform_inverse(self.u.x),
            spectral.transform_inverse(self.u.y),
            spectral.transform_inverse(self.theta),
        )

    def coeff_arrays(self):
        return self.u.x.coeffs, self.u.y.coeffs, self.theta.coeffs


@dataclass(frozen=True)
class StepperConfig:
    """Time-stepping options.

    ``mollification_eps > 0`` replaces every nonlinear and buoyancy term by its
    image under the sharp cutoff ``|k| <= 1/eps`` (the regularized system);
    ``0`` integrates the original equations. ``advect=False`` drops the
    transport terms, which is only useful for testing the linear part.
    """

    dt: float | str = 1e-3
    cfl_number: float = 0.4
    scheme: str = "imex_rk2"
    mollification_eps: float = 0.0
    dt_max: float = 1e-2
    advect: bool = True

    def __post_init__(self):
        if self.dt != "auto":
            try:
                dt = float(self.dt)
            except (TypeError, ValueError):
                raise ConfigurationError(f"dt must be a positive real or 'auto', got {self.dt!r}") from None
            if not (math.isfinite(dt) and dt > 0):
                raise ConfigurationError(f"dt must be positive, got {self.dt}")
            object.__setattr__(self, "dt", dt)
        if not 0 < self.cfl_number <= 1:
            raise ConfigurationError(f"cfl_number must lie in (0, 1], got {self.cfl_number}")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not (self.mollification_eps >= 0 and math.isfinite(self.mollification_eps)):
            raise ConfigurationError("mollification_eps must be a finite nonnegative real")
        if not self.dt_max > 0:
            raise ConfigurationError(f"dt_max must be positive, got {self.dt_max}")


# -- linear operators ---------------------------------------------------------


@lru_cache(maxsize=64)
def diffusion_rates(grid, visc):
    """Per-mode decay rates ``(lambda_u, lambda_theta)``."""
    kx2, ky2 = grid.kx**2, grid.ky**2
    d_x = visc.nu_xx * kx2 + visc.nu_xy * ky2
    d_y = visc.nu_yx * kx2 + visc.nu_yy * ky2
    k2o = grid.k2_odd
    lam_u = np.where(
        k2o > 0,
        (d_x * grid.ky_odd**2 + d_y * grid.kx_odd**2) * grid.inv_k2_odd,
        0.5 * (d_x + d_y),
    )
    lam_t = visc.kappa_x * kx2 + visc.kappa_y * ky2
    lam_u.flags.writeable = False
    lam_t.flags.writeable = False
    return lam_u, lam_t


@lru_cache(maxsize=64)
def _factors(grid, visc, dt):
    lam_u, lam_t = diffusion_rates(grid, visc)
    return (np.exp(-lam_u * dt), np.exp(-lam_t * dt),
            np.exp(-lam_u * 0.5 * dt), np.exp(-lam_t * 0.5 * dt))


@lru_cache(maxsize=16)
def _mollifier_mask(grid, eps):
    return grid.kabs <= 1.0 / eps


def _evaluate(fn, samples, name):
    out = np.asarray(fn(samples), dtype=float)
    if out.shape != samples.shape:
        out = np.broadcast_to(out, samples.shape).copy()
    if not np.all(np.isfinite(out)):
        raise BuoyancyEvaluationError(f"buoyancy law {name} returned non-finite values")
    return out


def buoyancy_samples(theta_samples, F):
    """Pointwise ``F``, ``F'`` and ``F''`` on collocation samples."""
    th = np.asarray(theta_samples, dtype=float)
    return {
        "F1": _evaluate(F.F1, th, "F1"),
        "F2": _evaluate(F.F2, th, "F2"),
        "dF1": _evaluate(F.dF1, th, "F1'"),
        "dF2": _evaluate(F.dF2, th, "F2'"),
        "d2F1": _evaluate(F.d2F1, th, "F1''"),
        "d2F2": _evaluate(F.d2F2, th, "F2''"),
    }


def buoyancy_field(theta, F):
    """Dealiased spectral image of ``F(theta)``."""
    th = spectral.transform_inverse(theta)
    f1 = _evaluate(F.F1, th, "F1")
    f2 = _evaluate(F.F2, th, "F2")
    mask = theta.grid.dealias_mask
    c = fft2(np.stack([f1, f2])) * mask
    return VectorField.from_coeffs(theta.grid, c[0], c[1], dealiased=True)


def _explicit_terms(grid, cx, cy, ct, F, eps, advect=True):
    """Projected nonlinear + buoyancy tendencies on coefficient arrays."""
    mx = grid.multiplier("x", 1)
    my = grid.multiplier("y", 1)
    mask = grid.dealias_mask
    if advect:
        phys = ifft2(np.stack([cx, cy, ct, mx * cx, my * cx, mx * cy, my * cy, mx * ct, my * ct])).real
        ux, uy, th = phys[0], phys[1], phys[2]
        adv_x = ux * phys[3] + uy * phys[4]
        adv_y = ux * phys[5] + uy * phys[6]
        adv_t = ux * phys[7] + uy * phys[8]
    else:
        th = ifft2(ct).real
        adv_x = adv_y = adv_t = np.zeros(grid.shape)
    f1 = _evaluate(F.F1, th, "F1")
    f2 = _evaluate(F.F2, th, "F2")
    hat = fft2(np.stack([f1 - adv_x, f2 - adv_y, -adv_t])) * mask
    if eps > 0:
        hat *= _mollifier_mask(grid, eps)
    gx, gy = spectral.project_coeffs(grid, hat[0], hat[1])
    return gx, gy, hat[2]


def _check_grid(state, *fields_):
    for f in fields_:
        if f is not None and f.grid != state.grid:
            raise ConfigurationError("grid mismatch between inputs")


def rhs(state, visc, F, eps=0.0):
    """Time derivative of ``(u, theta)``.

    The velocity tendency is ``P[-J(u.grad u) + J F(theta) + D u]`` and the
    temperature tendency ``-J(u.grad theta) + (kappa_x d_xx + kappa_y d_yy) theta``,
    with ``J`` the sharp cutoff when ``eps > 0`` and the identity otherwise.
    Products are formed in physical space and dealiased.
    """
    if eps < 0:
        raise ConfigurationError(f"eps must be nonnegative, got {eps}")
    grid = state.grid
    cx, cy, ct = state.coeff_arrays()
    gx, gy, gt = _explicit_terms(grid, cx, cy, ct, F, eps)
    lam_u, lam_t = diffusion_rates(grid, visc)
    vel = VectorField.from_coeffs(grid, gx - lam_u * cx, gy - lam_u * cy, solenoidal=True, dealiased=True)
    return vel, SpectralField(grid, gt - lam_t * ct, dealiased=True)


def cfl_dt(state, cfg):
    """Advective time step ``cfl * min(dx/|u^x|_inf, dy/|u^y|_inf)``, capped at ``dt_max``."""
    grid = state.grid
    ux = np.max(np.abs(ifft2(state.u.x.coeffs).real))
    uy = np.max(np.abs(ifft2(state.u.y.coeffs).real))
    candidates = [cfg.dt_max]
    if ux > 0:
        candidates.append(cfg.cfl_number * grid.dx / ux)
    if uy > 0:
        candidates.append(cfg.cfl_number * grid.dy / uy)
    return float(min(candidates))


def resolve_dt(state, cfg):
    return cfl_dt(state, cfg) if cfg.dt == "auto" else float(cfg.dt)


def step(state, visc, F, cfg, dt=None):
    """Advance one step of size ``dt`` (default: resolved from ``cfg``).

    Raises:
        BlowUpError: if the new state contains non-finite coefficients.
    """
    if dt is None:
        dt = resolve_dt(state, cfg)
    grid = state.grid
    eps = cfg.mollification_eps
    e_u, e_t, eh_u, eh_t = _factors(grid, visc, float(dt))
    cx, cy, ct = state.coeff_arrays()

    with np.errstate(over="ignore", invalid="ignore"):
        try:
            nx0, ny0, nt0 = _explicit_terms(grid, cx, cy, ct, F, eps, cfg.advect)
            if cfg.scheme == "imex_euler":
                ox = e_u * (cx + dt * nx0)
                oy = e_u * (cy + dt * ny0)
                ot = e_t * (ct + dt * nt0)
            else:
                h = 0.5 * dt
                mx_, my_ = spectral.project_coeffs(grid, eh_u * (cx + h * nx0), eh_u * (cy + h * ny0))
                mt = eh_t * (ct + h * nt0)
                nx1, ny1, nt1 = _explicit_terms(grid, mx_, my_, mt, F, eps, cfg.advect)
                ox = e_u * cx + dt * eh_u * nx1
                oy = e_u * cy + dt * eh_u * ny1
                ot = e_t * ct + dt * eh_t * nt1
        except BuoyancyEvaluationError:
            raise BlowUpError(state.t + dt) from None

    if not (np.all(np.isfinite(ox)) and np.all(np.isfinite(oy)) and np.all(np.isfinite(ot))):
        raise BlowUpError(state.t + dt)
    return State.from_coeffs(grid, ox, oy, ot, state.t + dt)


def recover_pressure(state, visc, F):
    """Zero-mean pressure making the unprojected momentum tendency divergence-free.

    Solves ``lap(pi) = div(-u.grad u + F(theta) + D u)`` where ``D`` is the
    anisotropic viscous operator applied componentwise.
    """
    grid = state.grid
    g = momentum_tendency_unprojected(state, visc, F)
    kx, ky = grid.kx_odd, grid.ky_odd
    pi = -1j * (kx * g.x.coeffs + ky * g.y.coeffs) * grid.inv_k2_odd
    pi[0, 0] = 0.0
    return SpectralField(grid, pi, dealiased=True)


def momentum_tendency_unprojected(state, visc, F):
    """``-u.grad u + F(theta) + D u`` before pressure removal (dealiased)."""
    grid = state.grid
    cx, cy, ct = state.coeff_arrays()
    mx = grid.multiplier("x", 1)
    my = grid.multiplier("y", 1)
    phys = ifft2(np.stack([cx, cy, ct, mx * cx, my * cx, mx * cy, my * cy])).real
    ux, uy, th = phys[0], phys[1], phys[2]
    adv_x = ux * phys[3] + uy * phys[4]
    adv_y = ux * phys[5] + uy * phys[6]
    f1 = _evaluate(F.F1, th, "F1")
    f2 = _evaluate(F.F2, th, "F2")
    hat = fft2(np.stack([f1 - adv_x, f2 - adv_y])) * grid.dealias_mask
    kx2, ky2 = grid.kx**2, grid.ky**2
    d_x = visc.nu_xx * kx2 + visc.nu_xy * ky2
    d_y = visc.nu_yx * kx2 + visc.nu_yy * ky2
    return VectorField.from_coeffs(grid, hat[0] - d_x * cx, hat[1] - d_y * cy, dealiased=True)


def with_dt(cfg, dt):
    return replace(cfg, dt=dt)
