"""Direct integration of the Madelung equations.

The state is carried as density and phase ``(rho, S)``::

    d(rho)/dt = -2 d(S' rho)/dx
    dS/dt     = -(S')^2 - V - Q,    Q = -(sqrt(rho))'' / sqrt(rho)

Internally the density enters through ``u = log(rho)``, for which
``Q = -(u''/2 + u'^2/4)`` and ``du/dt = -2 (S'' + S' u')``.  This avoids
dividing by a vanishing density in the tails.  Spatial derivatives use
:func:`~qhlab.spectral.detrended_derivatives`; time stepping is classical
RK4.  Nodes are never regularized: the integrator stops with
:class:`~qhlab.errors.NodeFormationError` instead.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NodeError, NodeFormationError
from .fields import ComplexField, Grid1D, HydroField, to_hydro
from .schrodinger import EvolutionConfig, split_step_iter
from .spectral import derivative, detrended_derivatives

#: Smallest density the hydrodynamic integrator accepts.
RHO_POSITIVE_MIN = 1e-12


def _require_node_free(rho, grid, what):
    bad = rho <= RHO_POSITIVE_MIN
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NodeError(f"{what}: density {rho[i]:.3g} at x={grid.x[i]:.6g} "
                        f"is at or below {RHO_POSITIVE_MIN:g}")


@dataclass(frozen=True, eq=False)
class MadelungState:
    """Hydro field plus its unwrapped phase ``S``."""

    hydro: HydroField
    phase: np.ndarray

    def __post_init__(self):
        s = np.array(self.phase, dtype=float)
        if s.shape != (self.hydro.grid.n,) or not np.all(np.isfinite(s)):
            raise ConfigurationError("phase must be finite and match the grid")
        s.flags.writeable = False
        object.__setattr__(self, "phase", s)
        _require_node_free(self.hydro.rho, self.hydro.grid, "MadelungState")

    @property
    def grid(self):
        return self.hydro.grid

    @classmethod
    def from_phase(cls, grid, rho, phase):
        """Build from density and phase; ``J = S' rho``."""
        rho = np.asarray(rho, dtype=float)
        _require_node_free(rho, grid, "MadelungState")
        s1, _ = detrended_derivatives(phase, grid)
        return cls(HydroField(grid, rho, s1 * rho), phase)

    @classmethod
    def from_field(cls, psi):
        """Polar decomposition of a node-free wavefunction (phase unwrapped from ``x_min``)."""
        rho = np.abs(psi.values) ** 2
        _require_node_free(rho, psi.grid, "MadelungState")
        return cls.from_phase(psi.grid, rho, np.unwrap(np.angle(psi.values)))

    def to_field(self):
        return ComplexField(self.grid, np.sqrt(self.hydro.rho) * np.exp(1j * self.phase))


def quantum_potential(h):
    """``Q = -(sqrt(rho))''/sqrt(rho)`` for a node-free density.

    Evaluated as ``-(u''/2 + u'^2/4)`` with ``u = log(rho)``, which is the
    same expression without the division by a small amplitude.
    """
    _require_node_free(h.rho, h.grid, "quantum potential")
    u1, u2 = detrended_derivatives(np.log(h.rho), h.grid)
    return -(0.5 * u2 + 0.25 * u1 * u1)


def quantum_potential_from_amplitude(amplitude, grid):
    """``Q = -R''/R`` for a smooth real amplitude that may change sign.

    Useful for eigenfunctions with nodes, where ``sqrt(rho) = |R|`` has
    kinks.  Returns ``nan`` at exact zeros of ``R``.
    """
    r = np.asarray(amplitude, dtype=float)
    r2 = derivative(r, grid, 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = -r2 / r
    q[r == 0] = np.nan
    return q


def stability_limit(grid):
    """Largest time step accepted by :func:`madelung_step` (``dx^2/4``)."""
    return grid.dx**2 / 4


def _rhs(u, s, v, grid):
    u1, u2 = detrended_derivatives(u, grid)
    s1, s2 = detrended_derivatives(s, grid)
    q = -(0.5 * u2 + 0.25 * u1 * u1)
    du = -2.0 * (s2 + s1 * u1)
    ds = -s1 * s1 - v - q
    return du, ds


def _rk4(u, s, v, grid, dt):
    k1u, k1s = _rhs(u, s, v, grid)
    k2u, k2s = _rhs(u + 0.5 * dt * k1u, s + 0.5 * dt * k1s, v, grid)
    k3u, k3s = _rhs(u + 0.5 * dt * k2u, s + 0.5 * dt * k2s, v, grid)
    k4u, k4s = _rhs(u + dt * k3u, s + dt * k3s, v, grid)
    u = u + dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
    s = s + dt / 6 * (k1s + 2 * k2s + 2 * k3s + k4s)
    return u, s


_LOG_MIN = np.log(RHO_POSITIVE_MIN)


def _check_log(grid, u, s, step):
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(s))):
        raise NodeFormationError(
            f"non-finite hydro fields at step {step} (node formation)", step)
    bad = u <= _LOG_MIN
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NodeFormationError(
            f"density fell to exp({u[i]:.4g}) at x={grid.x[i]:.6g} at step {step}", step)


def _state_from_log(grid, u, s, step):
    _check_log(grid, u, s, step)
    rho = np.exp(u)
    s1, _ = detrended_derivatives(s, grid)
    return MadelungState(HydroField(grid, rho, s1 * rho), s)


def _check_dt(grid, dt):
    if dt < 0:
        raise ConfigurationError("dt must be non-negative")
    if dt > stability_limit(grid):
        raise ConfigurationError(
            f"dt={dt:g} exceeds the stability limit dx^2/4={stability_limit(grid):g}")


def madelung_step(s, v, dt, step=1):
    """One RK4 step of the Madelung system; ``dt = 0`` returns ``s`` unchanged."""
    _check_dt(s.grid, dt)
    if dt == 0:
        return s
    with np.errstate(over="ignore", invalid="ignore"):
        u, ph = _rk4(np.log(s.hydro.rho), s.phase, v.values, s.grid, dt)
    return _state_from_log(s.grid, u, ph, step)


def madelung_iter(s, v, dt, steps, record_every=1):
    """Yield ``(step, t, MadelungState)`` at ``t = 0`` and every ``record_every`` steps.

    Records made before a :class:`NodeFormationError` have already been
    handed out when it is raised.
    """
    _check_dt(s.grid, dt)
    yield 0, 0.0, s
    u, ph = np.log(s.hydro.rho), s.phase.copy()
    for step in range(1, steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            u, ph = _rk4(u, ph, v.values, s.grid, dt)
        _check_log(s.grid, u, ph, step)
        if step % record_every == 0 or step == steps:
            yield step, step * dt, _state_from_log(s.grid, u, ph, step)


def madelung_evolve(s, v, dt, steps, record_every=1):
    """Repeated :func:`madelung_step`; returns ``[(t, MadelungState), ...]``."""
    return [(t, st) for _, t, st in madelung_iter(s, v, dt, steps, record_every)]


@dataclass
class CrossValidationReport:
    """Discrepancy between the spectral and hydrodynamic integrators over time."""

    times: list = field(default_factory=list)
    sup_rho_diff: list = field(default_factory=list)
    sup_J_diff: list = field(default_factory=list)
    completed: bool = True
    error: str = ""
    failed_step: int | None = None

    @property
    def max_rho_diff(self):
        return max(self.sup_rho_diff) if self.sup_rho_diff else float("nan")

    @property
    def max_J_diff(self):
        return max(self.sup_J_diff) if self.sup_J_diff else float("nan")

    def rows(self):
        return list(zip(self.times, self.sup_rho_diff, self.sup_J_diff))


def subgrid(grid, center, n):
    """Aligned window of ``n`` points of ``grid`` centred near ``center``."""
    i0 = int(round((center - grid.x_min) / grid.dx)) - n // 2
    if i0 < 0 or i0 + n > grid.n:
        raise ConfigurationError(f"window of {n} points around {center} leaves the grid")
    x0 = grid.x_min + i0 * grid.dx
    return Grid1D(x0, x0 + n * grid.dx, n)


def _window_slice(grid, window):
    if window is None:
        return slice(None)
    i0 = (window.x_min - grid.x_min) / grid.dx
    if (abs(window.dx - grid.dx) > 1e-12 * grid.dx or abs(i0 - round(i0)) > 1e-9
            or round(i0) < 0 or round(i0) + window.n > grid.n):
        raise ConfigurationError("window must be an aligned sub-grid of the field grid")
    i0 = int(round(i0))
    return slice(i0, i0 + window.n)


def cross_validate(initial, v, t_final, dt, record_every=None, window=None):
    """Run both pictures from ``initial`` and record their sup-norm discrepancies.

    The spectral solver runs on the grid of ``initial``.  The hydrodynamic
    solver runs on ``window`` (an aligned sub-grid, see :func:`subgrid`)
    or on the same grid; discrepancies are measured on the hydro points.
    A window lets the periodic reference box be large while the hydro
    domain stays where the density is above :data:`RHO_POSITIVE_MIN`.

    Node formation in the hydrodynamic run ends the comparison early; the
    report then has ``completed = False`` and keeps everything up to the
    last good record.
    """
    steps = int(round(t_final / dt))
    if steps < 1:
        raise ConfigurationError("t_final must cover at least one step")
    if record_every is None:
        record_every = max(1, steps // 100)
    psi = initial if initial.normalized else initial.normalize()
    sl = _window_slice(psi.grid, window)
    grid = window or psi.grid
    _check_dt(grid, dt)
    state = MadelungState.from_field(ComplexField(grid, psi.values[sl]))

    ref = split_step_iter(psi, v, EvolutionConfig(dt, steps, record_every))
    vloc = v.values[sl]
    report = CrossValidationReport()

    def record(h):
        step, _, f = next(ref)
        r = to_hydro(f)
        report.times.append(step * dt)
        report.sup_rho_diff.append(float(np.max(np.abs(h.rho - r.rho[sl]))))
        report.sup_J_diff.append(float(np.max(np.abs(h.current - r.current[sl]))))

    record(state.hydro)
    u, ph = np.log(state.hydro.rho), state.phase.copy()
    for step in range(1, steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            u, ph = _rk4(u, ph, vloc, grid, dt)
        try:
            _check_log(grid, u, ph, step)
        except NodeFormationError as exc:
            report.completed = False
            report.error = str(exc)
            report.failed_step = step
            return report
        if step % record_every == 0 or step == steps:
            record(_state_from_log(grid, u, ph, step).hydro)
    return report
