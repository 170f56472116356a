"""Lattice, field containers and the Madelung transform.

Units throughout: hbar = 1 and m = 1/2, so the Hamiltonian is
``-d^2/dx^2 + V`` and the continuity equation reads
``d(rho)/dt + 2 dJ/dx = 0`` with ``J = S' rho``.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ConfigurationError, NodeError
from .spectral import derivative

#: Densities at or below this are treated as exact nodes.
RHO_FLOOR = 1e-300

NORM_TOL = 1e-12


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic lattice ``x_i = x_min + i*dx``, ``i = 0..n-1``."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        n = self.n
        if isinstance(n, bool) or int(n) != n:
            raise ConfigurationError(f"point count must be an integer, got {n!r}")
        object.__setattr__(self, "n", int(n))
        if self.n < 16 or self.n & (self.n - 1):
            raise ConfigurationError(
                f"point count must be a power of two >= 16, got {self.n}")
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ConfigurationError("grid bounds must be finite")
        if not self.x_max > self.x_min:
            raise ConfigurationError(
                f"empty domain: x_max={self.x_max} <= x_min={self.x_min}")

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.n

    @property
    def length(self):
        return self.x_max - self.x_min

    @property
    def x(self):
        x = self.x_min + self.dx * np.arange(self.n)
        x.flags.writeable = False
        return x

    def index_of(self, x0):
        """Index of the grid point nearest to ``x0`` and the snap distance."""
        i = int(np.clip(np.rint((x0 - self.x_min) / self.dx), 0, self.n - 1))
        return i, abs(self.x_min + i * self.dx - x0)


def build_grid(x_min, x_max, n):
    return Grid1D(float(x_min), float(x_max), n)


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Sampled wavefunction on a grid."""

    grid: Grid1D
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        v = _frozen(self.values, complex)
        if v.shape != (self.grid.n,):
            raise ConfigurationError(
                f"expected {self.grid.n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("wavefunction samples must be finite")
        object.__setattr__(self, "values", v)
        if self.normalized and abs(norm(self) - 1.0) > NORM_TOL:
            raise ConfigurationError(
                f"field flagged normalized but norm is {norm(self)!r}")

    def normalize(self):
        return ComplexField(self.grid, self.values / np.sqrt(norm(self)), True)

    def with_phase(self, theta):
        """Global phase rotation ``exp(i theta) psi``."""
        return ComplexField(self.grid, np.exp(1j * theta) * self.values, self.normalized)


@dataclass(frozen=True, eq=False)
class HydroField:
    """Density ``rho`` and current density ``J`` on a grid."""

    grid: Grid1D
    rho: np.ndarray
    current: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        rho = _frozen(self.rho, float)
        cur = _frozen(self.current, float)
        n = self.grid.n
        if rho.shape != (n,) or cur.shape != (n,):
            raise ConfigurationError(
                f"expected {n} samples, got {rho.shape} and {cur.shape}")
        if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(cur))):
            raise ConfigurationError("hydro samples must be finite")
        if np.any(rho < 0):
            raise ConfigurationError("density must be non-negative")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "current", cur)
        if self.normalized:
            mass = rho.sum() * self.grid.dx
            if abs(mass - 1.0) > 1e-10:
                raise ConfigurationError(
                    f"field flagged normalized but mass is {mass!r}")

    def mass(self):
        return float(self.rho.sum() * self.grid.dx)

    def velocity(self):
        """Flow velocity ``J/rho``; undefined at nodes."""
        if np.any(self.rho <= RHO_FLOOR):
            i = int(np.argmax(self.rho <= RHO_FLOOR))
            raise NodeError(f"velocity undefined: node at x={self.grid.x[i]:.6g}")
        return self.current / self.rho


@dataclass(frozen=True)
class GaussianPairParams:
    """Two far-apart Gaussian packets at -L and +L.

    ``sigma`` is the dispersion of ``phi(u) = exp(-u^2 / 2 sigma^2)``; the
    packets enter as ``phi((x -/+ L)/2)`` so their amplitude width is
    ``2*sigma``.  ``norm_const`` is the overall normalizer and is
    recomputed when the state is sampled.
    """

    L: float
    sigma: float
    p0: float
    norm_const: float = 1.0

    def __post_init__(self):
        if not self.L > 0:
            raise ConfigurationError(f"L must be positive, got {self.L}")
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")
        if self.sigma > self.L / 5:
            raise ConfigurationError(
                f"packets not narrow/far apart: sigma={self.sigma} > L/5={self.L / 5}")
        if not self.norm_const > 0:
            raise ConfigurationError("norm_const must be positive")

    def phi(self, u):
        return np.exp(-np.square(u) / (2 * self.sigma**2))

    def amplitude(self, x, direction=1):
        """Unnormalized pair state; ``direction=-1`` flips the drift of the right packet."""
        x = np.asarray(x, dtype=float)
        left = self.phi((x + self.L) / 2)
        right = np.exp(1j * direction * self.p0 * x) * self.phi((x - self.L) / 2)
        return (left + right) / np.sqrt(2)

    def exact_norm_sq(self):
        """Closed-form integral of ``|amplitude|^2`` over the real line."""
        s = self.sigma
        overlap = np.exp(-self.L**2 / (4 * s * s) - (self.p0 * s) ** 2)
        return 2 * s * np.sqrt(np.pi) * (1 + overlap)

    def density(self, x):
        """Normalized line density, independent of any grid."""
        return np.abs(self.amplitude(x)) ** 2 / self.exact_norm_sq()


def gaussian_pair(params, grid, direction=1):
    """Sample the normalized Gaussian-pair state on ``grid``.

    ``direction=+1`` gives the right packet ``exp(+i p0 x)`` so it drifts away
    from the left one; ``-1`` sends it towards the left packet.
    """
    reach = params.L + 5 * (2 * params.sigma)
    if grid.x_min > -reach or grid.x_max < reach:
        raise ConfigurationError(
            f"packets overflow grid: need [{-reach}, {reach}] inside "
            f"[{grid.x_min}, {grid.x_max}]")
    if direction not in (1, -1):
        raise ConfigurationError("direction must be +1 or -1")
    psi = params.amplitude(grid.x, direction)
    return ComplexField(grid, psi).normalize()


def pair_norm_const(params, grid):
    """Copy of ``params`` with ``norm_const`` set from the sampled state."""
    raw = params.amplitude(grid.x)
    n2 = np.sum(np.abs(raw) ** 2) * grid.dx
    return replace(params, norm_const=float(1 / np.sqrt(n2)))


def norm(psi):
    """Discrete squared norm ``sum |psi_i|^2 dx``."""
    return float(np.sum(np.abs(psi.values) ** 2) * psi.grid.dx)


def to_hydro(psi):
    """Madelung observables: ``rho = |psi|^2``, ``J = Im(conj(psi) dpsi/dx)``."""
    v = psi.values
    re, im = v.real, v.imag
    rho = np.abs(v) ** 2
    # Re(psi) Im(psi)' - Im(psi) Re(psi)', so a real field has J = 0 exactly
    cur = re * derivative(im, psi.grid, 1) - im * derivative(re, psi.grid, 1)
    return HydroField(psi.grid, rho, cur, psi.normalized)


def from_hydro(h, anchor_phase=0.0):
    """Rebuild ``psi = sqrt(rho) exp(iS)`` with ``S(x_min) = anchor_phase``.

    The phase is the cumulative trapezoid integral of ``J/rho`` from the
    left edge, so any exact node breaks the reconstruction.
    """
    if np.any(h.rho <= RHO_FLOOR):
        i = int(np.argmax(h.rho <= RHO_FLOOR))
        raise NodeError(
            f"phase reconstruction undefined: node at x={h.grid.x[i]:.6g}")
    v = h.current / h.rho
    s = anchor_phase + cumulative_trapezoid(v, dx=h.grid.dx, initial=0.0)
    psi = np.sqrt(h.rho) * np.exp(1j * s)
    flag = h.normalized and abs(h.mass() - 1.0) <= NORM_TOL
    return ComplexField(h.grid, psi, flag)
