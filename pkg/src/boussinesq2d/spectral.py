"""
Periodic-box Fourier infrastructure.

Scalar fields live on a uniform ``nx x ny`` collocation grid over
``[0, Lx) x [0, Ly)``; arrays are indexed ``[i, j]`` with ``i`` along x and
``j`` along y. Spectral coefficients use the full complex FFT layout,
normalized so that ``coeffs[0, 0]`` is the mean of the samples.

First-order derivative multipliers drop the Nyquist wavenumber so that odd
derivatives of real fields stay real. The Leray projector, divergence,
vorticity and streamfunction inversion are all built from the same
multipliers, which makes ``div(leray_project(v)) == 0`` and the curl/Biot-Savart
round trip hold to roundoff on any input.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

from boussinesq2d.errors import (
    ConfigurationError,
    ContractViolationError,
    CorruptedSpectrumError,
    IncompatibleDataError,
)

TWO_PI = 2.0 * np.pi

# |imag| / ||f|| above which an inverse transform is considered corrupted
IMAG_RESIDUE_TOL = 1e-10
SOLENOIDAL_TOL = 1e-9

SEMINORM_PATTERNS = (
    "dx", "dy", "grad", "dxx", "dxy", "dyy", "lap",
    "grad_dx", "grad_dy", "lap_dx", "lap_dy", "hess",
)


def fft2(samples):
    return scipy.fft.fft2(samples, axes=(-2, -1), norm="forward")


def ifft2(coeffs):
    return scipy.fft.ifft2(coeffs, axes=(-2, -1), norm="forward")


@dataclass(frozen=True)
class Grid:
    """Uniform periodic collocation grid.

    Wavenumbers follow ``k = n * 2*pi/L`` with ``n`` in ``{-N/2+1, ..., N/2}``.
    """

    nx: int
    ny: int
    Lx: float = TWO_PI
    Ly: float = TWO_PI

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 8 or n % 2:
                raise ConfigurationError(f"{name} must be an even integer >= 8, got {n}")
            object.__setattr__(self, name, int(n))
        for name in ("Lx", "Ly"):
            L = float(getattr(self, name))
            if not np.isfinite(L) or L <= 0:
                raise ConfigurationError(f"{name} must be a positive real, got {L}")
            object.__setattr__(self, name, L)

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def area(self):
        return self.Lx * self.Ly

    @property
    def dx(self):
        return self.Lx / self.nx

    @property
    def dy(self):
        return self.Ly / self.ny

    @property
    def cell_area(self):
        return self.dx * self.dy

    @property
    def is_square(self):
        return self.nx == self.ny and self.Lx == self.Ly

    @cached_property
    def mode_x(self):
        """Integer mode numbers along x, Nyquist taken positive."""
        n = np.fft.fftfreq(self.nx, 1.0 / self.nx)
        n[self.nx // 2] = self.nx // 2
        return n[:, None]

    @cached_property
    def mode_y(self):
        n = np.fft.fftfreq(self.ny, 1.0 / self.ny)
        n[self.ny // 2] = self.ny // 2
        return n[None, :]

    @cached_property
    def kx(self):
        return self.mode_x * (TWO_PI / self.Lx)

    @cached_property
    def ky(self):
        return self.mode_y * (TWO_PI / self.Ly)

    @cached_property
    def kx_odd(self):
        """x wavenumber used by odd-order derivatives (Nyquist removed)."""
        k = self.kx.copy()
        k[self.nx // 2, :] = 0.0
        return k

    @cached_property
    def ky_odd(self):
        k = self.ky.copy()
        k[:, self.ny // 2] = 0.0
        return k

    @cached_property
    def k2(self):
        """|k|^2 on the full spectral array."""
        return self.kx**2 + self.ky**2

    @cached_property
    def kabs(self):
        return np.sqrt(self.k2)

    @cached_property
    def k2_odd(self):
        return self.kx_odd**2 + self.ky_odd**2

    @cached_property
    def inv_k2_odd(self):
        """1/|k~|^2 with zero where the first-order wavevector vanishes."""
        out = np.zeros(self.shape)
        nz = self.k2_odd > 0
        out[nz] = 1.0 / self.k2_odd[nz]
        return out

    @cached_property
    def inv_k2(self):
        out = np.zeros(self.shape)
        nz = self.k2 > 0
        out[nz] = 1.0 / self.k2[nz]
        return out

    @cached_property
    def dealias_mask(self):
        keep_x = np.abs(self.mode_x) <= self.nx / 3.0
        keep_y = np.abs(self.mode_y) <= self.ny / 3.0
        return keep_x & keep_y

    @cached_property
    def coords(self):
        """Collocation coordinates ``(X, Y)``, each of shape ``(nx, ny)``."""
        x = np.arange(self.nx) * self.dx
        y = np.arange(self.ny) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def multiplier(self, axis, order):
        """Fourier multiplier ``(i k_axis)^order``."""
        if axis not in ("x", "y"):
            raise ConfigurationError(f"axis must be 'x' or 'y', got {axis!r}")
        if int(order) != order or order < 1:
            raise ConfigurationError(f"derivative order must be a positive integer, got {order}")
        if order % 2:
            k = self.kx_odd if axis == "x" else self.ky_odd
        else:
            k = self.kx if axis == "x" else self.ky
        return (1j * k) ** int(order)

    @cached_property
    def _pattern_multipliers(self):
        mx = self.multiplier("x", 1)
        my = self.multiplier("y", 1)
        mxx = self.multiplier("x", 2)
        myy = self.multiplier("y", 2)
        mxy = mx * my
        lap = mxx + myy
        return {
            "dx": [mx],
            "dy": [my],
            "grad": [mx, my],
            "dxx": [mxx],
            "dxy": [mxy],
            "dyy": [myy],
            "lap": [lap],
            "hess": [mxx, mxy, mxy, myy],
            "grad_dx": [mx * mx, my * mx],
            "grad_dy": [mx * my, my * my],
            "lap_dx": [lap * mx],
            "lap_dy": [lap * my],
        }

    def pattern_multipliers(self, pattern):
        try:
            return self._pattern_multipliers[pattern]
        except KeyError:
            raise ConfigurationError(f"unknown derivative pattern {pattern!r}") from None

    def seminorm_weight(self, pattern):
        """Weight ``W(k)`` with ``||D f||^2 = area * sum W |f_k|^2``."""
        cache = self.__dict__.setdefault("_weights", {})
        if pattern not in cache:
            cache[pattern] = sum(np.abs(m) ** 2 for m in self.pattern_multipliers(pattern))
        return cache[pattern]


def _readonly(a):
    v = a.view()
    v.flags.writeable = False
    return v


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real scalar field on ``grid``."""

    grid: Grid
    coeffs: np.ndarray
    dealiased: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ConfigurationError(
                f"coefficient array shape {c.shape} does not match grid {self.grid.shape}"
            )
        object.__setattr__(self, "coeffs", _readonly(c))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape, np.complex128), dealiased=True)

    @property
    def mean(self):
        return self.coeffs[0, 0].real

    def physical(self):
        return transform_inverse(self)

    def _check(self, other):
        if other.grid != self.grid:
            raise ConfigurationError("fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs, self.dealiased and other.dealiased)

    def __sub__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs, self.dealiased and other.dealiased)

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs, self.dealiased)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * float(scalar), self.dealiased)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VectorField:
    """Pair of spectral fields ``(x, y)`` sharing a grid."""

    x: SpectralField
    y: SpectralField
    solenoidal: bool = False

    def __post_init__(self):
        if self.x.grid != self.y.grid:
            raise ConfigurationError("vector components live on different grids")

    @property
    def grid(self):
        return self.x.grid

    @property
    def dealiased(self):
        return self.x.dealiased and self.y.dealiased

    @classmethod
    def zeros(cls, grid):
        z = SpectralField.zeros(grid)
        return cls(z, z, solenoidal=True)

    @classmethod
    def from_coeffs(cls, grid, cx, cy, solenoidal=False, dealiased=False):
        return cls(SpectralField(grid, cx, dealiased), SpectralField(grid, cy, dealiased), solenoidal)

    def __add__(self, other):
        return VectorField(self.x + other.x, self.y + other.y, self.solenoidal and other.solenoidal)

    def __sub__(self, other):
        return VectorField(self.x - other.x, self.y - other.y, self.solenoidal and other.solenoidal)

    def __neg__(self):
        return VectorField(-self.x, -self.y, self.solenoidal)

    def __mul__(self, scalar):
        return VectorField(self.x * scalar, self.y * scalar, self.solenoidal)

    __rmul__ = __mul__


def transform_forward(real_samples, grid):
    """Forward transform of real collocation samples; ``coeff(0)`` is the mean."""
    a = np.asarray(real_samples)
    if a.shape != grid.shape:
        raise ConfigurationError(f"sample array shape {a.shape} does not match grid {grid.shape}")
    if np.iscomplexobj(a):
        raise ConfigurationError("transform_forward expects real samples")
    return SpectralField(grid, fft2(a.astype(np.float64, copy=False)))


def transform_inverse(f):
    """Real samples of ``f``.

    Raises:
        CorruptedSpectrumError: if the imaginary residue exceeds
            ``1e-10 * ||coeffs||``.
    """
    z = ifft2(f.coeffs)
    scale = np.sqrt(np.sum(np.abs(f.coeffs) ** 2))
    residue = np.max(np.abs(z.imag)) if z.size else 0.0
    if residue > IMAG_RESIDUE_TOL * scale:
        raise CorruptedSpectrumError(
            f"imaginary residue {residue:.3e} exceeds tolerance for spectrum of norm {scale:.3e}"
        )
    return np.ascontiguousarray(z.real)


def is_conjugate_symmetric(f, rtol=1e-13):
    c = f.coeffs
    flipped = np.roll(c[::-1, ::-1], shift=(1, 1), axis=(0, 1))
    scale = max(np.max(np.abs(c)), np.finfo(float).tiny)
    return np.max(np.abs(c - np.conj(flipped))) <= rtol * scale


def deriv(f, axis, order=1):
    """Spectral derivative ``d^order f / d axis^order``."""
    return SpectralField(f.grid, f.coeffs * f.grid.multiplier(axis, order), f.dealiased)


def dealias(f):
    """Two-thirds rule truncation on each axis."""
    if isinstance(f, VectorField):
        return VectorField(dealias(f.x), dealias(f.y), f.solenoidal)
    return SpectralField(f.grid, f.coeffs * f.grid.dealias_mask, dealiased=True)


def project_coeffs(grid, cx, cy):
    """Leray projection on raw coefficient arrays."""
    kx, ky = grid.kx_odd, grid.ky_odd
    kdotu = (kx * cx + ky * cy) * grid.inv_k2_odd
    return cx - kx * kdotu, cy - ky * kdotu


def leray_project(v):
    """L2-orthogonal projection onto divergence-free fields.

    The mean (k = 0) mode passes through unchanged.
    """
    px, py = project_coeffs(v.grid, v.x.coeffs, v.y.coeffs)
    return VectorField(
        SpectralField(v.grid, px, v.x.dealiased),
        SpectralField(v.grid, py, v.y.dealiased),
        solenoidal=True,
    )


def mollify(f, eps):
    """Sharp Fourier cutoff: zero every mode with ``|k| > 1/eps``."""
    if not eps > 0:
        raise ConfigurationError(f"mollification eps must be positive, got {eps}")
    if isinstance(f, VectorField):
        return VectorField(mollify(f.x, eps), mollify(f.y, eps), f.solenoidal)
    keep = f.grid.kabs <= 1.0 / eps
    return SpectralField(f.grid, f.coeffs * keep, f.dealiased)


def divergence(v):
    g = v.grid
    return SpectralField(g, 1j * (g.kx_odd * v.x.coeffs + g.ky_odd * v.y.coeffs), v.dealiased)


def divergence_residual(v):
    """``max_k |k.u_k| / (max|k| * ||u||)``; zero for exactly solenoidal fields."""
    g = v.grid
    div = np.abs(g.kx_odd * v.x.coeffs + g.ky_odd * v.y.coeffs)
    scale = np.sqrt(np.sum(np.abs(v.x.coeffs) ** 2 + np.abs(v.y.coeffs) ** 2))
    if scale == 0.0:
        return 0.0
    return float(np.max(div) / (np.sqrt(np.max(g.k2_odd)) * scale))


def inner(f, g):
    """L2 inner product ``(f, g)`` over the box, computed spectrally."""
    if isinstance(f, VectorField):
        return inner(f.x, g.x) + inner(f.y, g.y)
    f._check(g)
    return float(f.grid.area * np.sum(f.coeffs * np.conj(g.coeffs)).real)


def pattern_samples(f, pattern):
    """Physical samples of each component of a derivative pattern applied to ``f``."""
    if isinstance(f, VectorField):
        return pattern_samples(f.x, pattern) + pattern_samples(f.y, pattern)
    mults = f.grid.pattern_multipliers(pattern)
    stacked = ifft2(np.stack([m * f.coeffs for m in mults])).real
    return list(stacked)


def lp_norm_samples(components, grid, p):
    """Quadrature ``L^p`` norm of the pointwise Euclidean magnitude of ``components``."""
    mag2 = sum(c * c for c in components)
    if p == np.inf:
        return float(np.sqrt(np.max(mag2)))
    return float((np.sum(mag2 ** (p / 2.0)) * grid.cell_area) ** (1.0 / p))


def norm(f, kind="L2", p=None):
    """Norm or seminorm of a scalar or vector field.

    Args:
        f: SpectralField or VectorField.
        kind: ``"L2"`` (spectral Parseval), ``"Lp"`` with ``p`` in ``[1, inf)``
            (collocation quadrature), ``"Linf"`` (max over the grid), or one of
            ``SEMINORM_PATTERNS`` for the L2 norm of that derivative pattern.
    """
    grid = f.grid
    comps = [f.x, f.y] if isinstance(f, VectorField) else [f]
    if kind == "L2":
        return float(np.sqrt(grid.area * sum(np.sum(np.abs(c.coeffs) ** 2) for c in comps)))
    if kind in SEMINORM_PATTERNS:
        w = grid.seminorm_weight(kind)
        return float(np.sqrt(grid.area * sum(np.sum(w * np.abs(c.coeffs) ** 2) for c in comps)))
    if kind == "Lp":
        if p is None or not np.isfinite(p) or p < 1:
            raise ConfigurationError(f"Lp norm needs p in [1, inf), got {p}")
        return lp_norm_samples([ifft2(c.coeffs).real for c in comps], grid, float(p))
    if kind == "Linf":
        return lp_norm_samples([ifft2(c.coeffs).real for c in comps], grid, np.inf)
    raise ConfigurationError(f"unknown norm kind {kind!r}")


def vorticity(u):
    """Scalar curl ``w = d_x u^y - d_y u^x``.

    Raises:
        ContractViolationError: if ``u`` is not divergence-free.
    """
    if divergence_residual(u) > SOLENOIDAL_TOL:
        raise ContractViolationError("vorticity requires a divergence-free velocity")
    g = u.grid
    w = 1j * (g.kx_odd * u.y.coeffs - g.ky_odd * u.x.coeffs)
    return SpectralField(g, w, u.dealiased)


def velocity_from_vorticity(w):
    """Zero-mean divergence-free velocity whose vorticity is ``w``.

    Solves ``lap(psi) = w`` and returns ``u = (-d_y psi, d_x psi)``.

    Raises:
        IncompatibleDataError: if ``w`` has nonzero mean.
    """
    g = w.grid
    c = w.coeffs
    if abs(c[0, 0]) > 1e-12 * max(np.max(np.abs(c)), 1e-300):
        raise IncompatibleDataError("vorticity must have zero mean on the periodic box")
    psi = -c * g.inv_k2_odd
    ux = -1j * g.ky_odd * psi
    uy = 1j * g.kx_odd * psi
    return VectorField(
        SpectralField(g, ux, w.dealiased), SpectralField(g, uy, w.dealiased), solenoidal=True
    )


def poisson_solve(g):
    """Zero-mean solution of ``-lap f = g``.

    Raises:
        IncompatibleDataError: if ``g`` has nonzero mean.
    """
    c = g.coeffs
    if abs(c[0, 0]) > 1e-12 * max(np.max(np.abs(c)), 1e-300):
        raise IncompatibleDataError("Poisson source must have zero mean on the periodic box")
    return SpectralField(g.grid, c * g.grid.inv_k2, g.dealiased)
