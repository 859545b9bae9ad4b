"""
Initial-condition generators.

Random fields are drawn on a fixed integer-mode lattice ``|n_x|, |n_y| <= n_max``
and then embedded into the grid, so a given seed describes the same continuous
field at every resolution that can hold it.
"""

import math

import numpy as np

from boussinesq2d import spectral
from boussinesq2d.errors import ConfigurationError
from boussinesq2d.model import State
from boussinesq2d.spectral import SpectralField, VectorField, ifft2

TWO_PI = 2.0 * np.pi


def lattice_field(grid, rng, n_max, magnitude, random_magnitude=True, zero_mean=True):
    """Hermitian coefficient array with modes inside the disc ``|n| <= n_max``.

    ``magnitude`` maps the integer-mode radius ``|n|`` to a coefficient scale;
    each mode gets that scale times a complex normal draw
    (``random_magnitude=True``) or a unit-modulus random phase.
    """
    if n_max >= min(grid.nx, grid.ny) / 3.0:
        raise ConfigurationError(
            f"mode radius {n_max} does not fit under the dealiasing limit of grid {grid.shape}"
        )
    n = np.arange(-n_max, n_max + 1)
    NX, NY = np.meshgrid(n, n, indexing="ij")
    draws = rng.standard_normal((n.size, n.size, 2))
    phases = rng.uniform(0.0, TWO_PI, (n.size, n.size))
    radius = np.hypot(NX, NY)
    upper = ((NX > 0) | ((NX == 0) & (NY > 0))) & (radius <= n_max)

    coeffs = np.zeros(grid.shape, np.complex128)
    amp = magnitude(radius[upper])
    if random_magnitude:
        vals = amp * (draws[upper, 0] + 1j * draws[upper, 1]) / np.sqrt(2.0)
    else:
        vals = amp * np.exp(1j * phases[upper])
    ix, iy = NX[upper] % grid.nx, NY[upper] % grid.ny
    coeffs[ix, iy] = vals
    coeffs[(-NX[upper]) % grid.nx, (-NY[upper]) % grid.ny] = np.conj(vals)
    if not zero_mean:
        coeffs[0, 0] = magnitude(np.zeros(1))[0] * draws[n_max, n_max, 0]
    return coeffs


def refined_max_abs(field, factor=8):
    """Sup of ``|f|`` estimated on a ``factor``-times finer grid (band-limited interpolant)."""
    g = field.grid
    big = np.zeros((g.nx * factor, g.ny * factor), np.complex128)
    c = field.coeffs
    hx, hy = g.nx // 2, g.ny // 2
    # drop Nyquist lines; they are ambiguous under zero padding
    big[:hx, :hy] = c[:hx, :hy]
    big[:hx, -hy + 1:] = c[:hx, -hy + 1:]
    big[-hx + 1:, :hy] = c[-hx + 1:, :hy]
    big[-hx + 1:, -hy + 1:] = c[-hx + 1:, -hy + 1:]
    return float(np.max(np.abs(ifft2(big).real)))


def random_theta(grid, linf=1.0, seed=1, n_max=4, decay=1.0):
    """Zero-mean random band-limited temperature with sup norm ``linf``."""
    rng = np.random.default_rng([seed, 7])
    c = lattice_field(grid, rng, n_max, lambda r: (1.0 + r) ** (-decay))
    f = SpectralField(grid, c, dealiased=True)
    peak = refined_max_abs(f)
    return f * (linf / peak if peak > 0 else 0.0)


def bump_theta(grid, amplitude=1.0, width=0.5, center=None):
    """Periodized Gaussian bump."""
    X, Y = grid.coords
    cx, cy = center if center is not None else (grid.Lx / 2, grid.Ly / 2)
    dx = (X - cx + grid.Lx / 2) % grid.Lx - grid.Lx / 2
    dy = (Y - cy + grid.Ly / 2) % grid.Ly - grid.Ly / 2
    th = amplitude * np.exp(-(dx**2 + dy**2) / (2 * width**2))
    return spectral.dealias(spectral.transform_forward(th, grid))


def taylor_green(grid, amplitude=1.0, modes=(1, 1)):
    """``u = A (sin(kx x) cos(ky y), -(kx/ky) cos(kx x) sin(ky y))``."""
    X, Y = grid.coords
    kx = modes[0] * TWO_PI / grid.Lx
    ky = modes[1] * TWO_PI / grid.Ly
    ux = amplitude * np.sin(kx * X) * np.cos(ky * Y)
    uy = -amplitude * (kx / ky) * np.cos(kx * X) * np.sin(ky * Y)
    return State.from_physical(grid, ux, uy, np.zeros(grid.shape)).u


def random_velocity(grid, energy=0.5, seed=1, k_peak=3.0, width=1.5, n_max=8):
    """Random divergence-free velocity with a Gaussian energy spectrum.

    ``energy`` is the mean kinetic energy density ``0.5 * <|u|^2>``.
    """
    rng = np.random.default_rng([seed, 11])

    def amp(r):
        r = np.maximum(r, 1e-12)
        spectrum = np.exp(-((r - k_peak) ** 2) / (2 * width**2))
        return np.sqrt(spectrum / (TWO_PI * r)) / r

    psi = lattice_field(grid, rng, n_max, amp)
    ux = -1j * grid.ky_odd * psi
    uy = 1j * grid.kx_odd * psi
    e = 0.5 * np.sum(np.abs(ux) ** 2 + np.abs(uy) ** 2)
    s = np.sqrt(energy / e) if e > 0 else 0.0
    return VectorField.from_coeffs(grid, s * ux, s * uy, solenoidal=True, dealiased=True)


VELOCITY_GENERATORS = ("zero", "taylor-green", "random")
THETA_GENERATORS = ("zero", "bump", "random")


def make_state(grid, velocity="random", theta="random", seed=1, velocity_amplitude=0.5,
               theta_amplitude=1.0, velocity_nmax=8, theta_nmax=4):
    """Assemble an initial :class:`State` from named generators.

    ``velocity_amplitude`` is the kinetic energy density for ``random`` and the
    peak speed for ``taylor-green``; ``theta_amplitude`` is the sup norm for
    ``random`` and the peak for ``bump``. Mode radii are clipped to what the
    grid can hold under the dealiasing rule.
    """
    fit = math.ceil(min(grid.nx, grid.ny) / 3.0) - 1
    velocity_nmax, theta_nmax = min(velocity_nmax, fit), min(theta_nmax, fit)
    if velocity == "zero":
        u = VectorField.zeros(grid)
    elif velocity == "taylor-green":
        u = taylor_green(grid, velocity_amplitude)
    elif velocity == "random":
        u = random_velocity(grid, velocity_amplitude, seed, n_max=velocity_nmax)
    else:
        raise ConfigurationError(f"unknown velocity generator {velocity!r}; expected {VELOCITY_GENERATORS}")

    if theta == "zero":
        th = SpectralField.zeros(grid)
    elif theta == "bump":
        th = bump_theta(grid, theta_amplitude)
    elif theta == "random":
        th = random_theta(grid, theta_amplitude, seed, n_max=theta_nmax)
    else:
        raise ConfigurationError(f"unknown theta generator {theta!r}; expected {THETA_GENERATORS}")

    return State.from_coeffs(grid, u.x.coeffs, u.y.coeffs, th.coeffs)
