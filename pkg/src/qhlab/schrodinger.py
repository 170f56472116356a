"""Split-step Fourier integration of ``i dpsi/dt = (-d^2/dx^2 + V) psi``."""

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .errors import ConfigurationError, InstabilityError
from .fields import ComplexField, build_grid, gaussian_pair, to_hydro
from .spectral import derivative, wavenumbers


@dataclass(frozen=True, eq=False)
class Potential1D:
    """Potential sampled on a grid; ``kind`` is ``free``, ``harmonic`` or ``custom``."""

    kind: str
    values: np.ndarray
    kappa: float = 0.0

    def __post_init__(self):
        if self.kind not in ("free", "harmonic", "custom"):
            raise ConfigurationError(f"unknown potential kind {self.kind!r}")
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise ConfigurationError("potential samples must be a finite 1D array")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def free(cls, grid):
        return cls("free", np.zeros(grid.n))

    @classmethod
    def harmonic(cls, grid, kappa=1.0):
        """``V = kappa x^2``; ``kappa = 1`` has levels ``2j + 1``."""
        return cls("harmonic", kappa * grid.x**2, float(kappa))

    @classmethod
    def custom(cls, grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n,):
            raise ConfigurationError(f"expected {grid.n} potential samples")
        return cls("custom", values)


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    steps: int
    record_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ConfigurationError(f"steps must be a positive integer, got {self.steps}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ConfigurationError("record_every must be a positive integer")

    @property
    def t_final(self):
        return self.dt * self.steps


def _check_potential(psi, v):
    if v.values.shape != (psi.grid.n,):
        raise ConfigurationError("potential and field live on different grids")


def split_step_iter(psi, v, cfg):
    """Strang-split spectral propagation, yielding ``(step, t, ComplexField)``.

    Each step applies half the potential phase, the exact kinetic
    propagator ``exp(-i k^2 dt)`` in Fourier space, and the other half of
    the potential.  Records are the input at ``t = 0``, every
    ``record_every``-th step, and the final step.
    """
    if not psi.normalized:
        raise ConfigurationError("split_step_evolve expects a normalized field")
    _check_potential(psi, v)
    k = wavenumbers(psi.grid)
    with np.errstate(over="ignore", invalid="ignore"):
        half_v = np.exp(-0.5j * cfg.dt * v.values)
    kinetic = np.exp(-1j * cfg.dt * k**2)

    yield 0, 0.0, psi
    y = psi.values.copy()
    fft, ifft = np.fft.fft, np.fft.ifft
    for step in range(1, cfg.steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            y = half_v * ifft(kinetic * fft(half_v * y))
        if step % cfg.record_every == 0 or step == cfg.steps:
            if not np.all(np.isfinite(y)):
                raise InstabilityError(f"non-finite wavefunction at step {step}", step)
            yield step, step * cfg.dt, ComplexField(psi.grid, y.copy())


def split_step_evolve(psi, v, cfg):
    """All records of :func:`split_step_iter` as ``[(t, ComplexField), ...]``."""
    return [(t, f) for _, t, f in split_step_iter(psi, v, cfg)]


def free_gaussian_oracle(sigma, p0, x0, t, grid):
    """Closed-form free evolution of ``exp(-(x-x0)^2/4a) exp(i p0 x)``, ``a = sigma^2/2``.

    Under ``i dpsi/dt = -psi''`` the width parameter becomes ``a + i t``
    and the centre moves with group velocity ``2 p0``.
    """
    x = grid.x
    a = sigma**2 / 2
    at = a + 1j * t
    psi = (np.sqrt(a / at) * np.exp(1j * p0 * (x - p0 * t))
           * np.exp(-(x - x0 - 2 * p0 * t) ** 2 / (4 * at)))
    return ComplexField(grid, psi).normalize()


def coherent_state_density(q0, p0, t, grid):
    """Exact density of a displaced ground state in ``V = x^2`` (oscillation frequency 2)."""
    q = q0 * np.cos(2 * t) + p0 * np.sin(2 * t)
    return np.exp(-(grid.x - q) ** 2) / np.sqrt(np.pi)


def coherent_state(q0, p0, grid):
    """Ground state of ``V = x^2`` displaced to ``q0`` with momentum ``p0``."""
    x = grid.x
    psi = np.exp(-(x - q0) ** 2 / 2 + 1j * p0 * x) / np.pi**0.25
    return ComplexField(grid, psi).normalize()


def energy(psi, v):
    """Expectation ``<psi| -d^2/dx^2 + V |psi>`` with a spectral kinetic term."""
    _check_potential(psi, v)
    y = psi.values
    hy = -derivative(y, psi.grid, 2) + v.values * y
    e = np.sum(np.conj(y) * hy) * psi.grid.dx
    if abs(e.imag) > 1e-10 * max(1.0, abs(e.real)):
        raise InstabilityError(f"energy has imaginary part {e.imag:.3e}")
    return float(e.real)


def default_pair_grid(params, n=4096):
    half = 4 * params.L + 10 * params.sigma
    return build_grid(-half, half, n)


def meeting_point(params):
    """Time and place at which the approaching right packet sits on the left one.

    With the right packet's drift flipped it moves left with group velocity
    ``2 p0`` and reaches ``x = -L`` at ``t = L/p0``; both packets then share
    the same centre and width, so their phase difference is exactly linear.
    """
    if params.p0 == 0:
        raise ConfigurationError("packets without drift never meet")
    return params.L / abs(params.p0), -params.L


def evolve_pair_to_interference(params, cfg, grid=None, direction=-1):
    """Evolve the Gaussian pair freely and return ``[(t, HydroField), ...]``.

    ``direction=-1`` (default) flips the drift so the right packet moves
    towards the left one.
    """
    grid = grid or default_pair_grid(params)
    if params.p0 != 0 and cfg.t_final < params.L / (2 * abs(params.p0)):
        raise ConfigurationError(
            f"run too short for the packets to meet: t_final={cfg.t_final} "
            f"< L/(2 p0)={params.L / (2 * abs(params.p0))}")
    psi = gaussian_pair(params, grid, direction)
    snaps = split_step_evolve(psi, Potential1D.free(grid), cfg)
    return [(t, to_hydro(f)) for t, f in snaps]


def fringe_spacing(h, center, half_width):
    """Mean distance between density maxima in ``[center - hw, center + hw]``.

    Peak positions are refined by parabolic interpolation.  Returns ``nan``
    when fewer than two maxima are found.
    """
    x = h.grid.x
    sel = np.flatnonzero(np.abs(x - center) <= half_width)
    rho = h.rho[sel]
    peaks, _ = find_peaks(rho)
    if len(peaks) < 2:
        return float("nan")
    pos = []
    for p in peaks:
        if 0 < p < len(rho) - 1:
            a, b, c = rho[p - 1], rho[p], rho[p + 1]
            den = a - 2 * b + c
            shift = 0.5 * (a - c) / den if den != 0 else 0.0
        else:
            shift = 0.0
        pos.append(x[sel[p]] + shift * h.grid.dx)
    return float(np.mean(np.diff(pos)))


def interference_contrast(params, cfg, center, half_width, grid=None, direction=-1):
    """Size of the interference term near ``center`` after ``cfg``.

    Each packet is evolved on its own; by linearity the cross term is
    ``rho - rho_left - rho_right``.  Its peak magnitude in the window is
    returned relative to the peak of the full density.
    """
    grid = grid or default_pair_grid(params)
    x = grid.x
    raw = params.amplitude(x, direction)
    z = np.sqrt(np.sum(np.abs(raw) ** 2) * grid.dx)
    left = params.phi((x + params.L) / 2) / np.sqrt(2) / z
    right = raw / z - left
    k = wavenumbers(grid)
    prop = np.exp(-1j * cfg.t_final * k**2)

    def final(y):
        return np.abs(np.fft.ifft(prop * np.fft.fft(y))) ** 2

    full = final(raw / z)
    cross = full - final(left) - final(right)
    win = np.abs(x - center) <= half_width
    return float(np.max(np.abs(cross[win])) / np.max(full))
