"""Phase difference across a low-density gap and its response to a current shift.

The phase drop over ``[-ell, ell]`` is the integral of the flow velocity
``J/rho``.  Shifting the initial current by a constant ``eps`` shifts it by
``eps * integral(1/rho)``, which is ``2 ell / eps^(N-1)`` when the gap
density is ``eps^N``: a tiny perturbation produces a huge phase change.

Quadratures run in ``numpy.longdouble``.  Over a gap with ``rho ~ 1e-11``
the integrands reach ``1e9`` and the shift must survive a subtraction of
two such numbers.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .errors import CalibrationError, ConfigurationError, NodeError
from .fields import (
    RHO_FLOOR, GaussianPairParams, HydroField, build_grid, gaussian_pair, to_hydro)

log = logging.getLogger(__name__)

LD = np.longdouble


def snap_interval(grid, ell):
    """Grid indices nearest to ``-ell`` and ``ell`` and the larger snap distance."""
    if ell < 0:
        raise ConfigurationError("ell must be non-negative")
    ia, da = grid.index_of(-ell)
    ib, db = grid.index_of(ell)
    return ia, ib, max(da, db)


def _interval(h, ell):
    ia, ib, snap = snap_interval(h.grid, ell)
    if snap > 0:
        log.debug("ell=%g snapped to grid (distance %.3g)", ell, snap)
    sl = slice(ia, ib + 1)
    rho = h.rho[sl]
    if np.any(rho <= RHO_FLOOR):
        i = ia + int(np.argmax(rho <= RHO_FLOOR))
        raise NodeError(f"node inside the probe interval at x={h.grid.x[i]:.6g}")
    return sl


def _trapz(f, dx):
    f = np.asarray(f, dtype=LD)
    if f.size < 2:
        return LD(0)
    return LD(dx) * (f.sum() - (f[0] + f[-1]) / 2)


def phase_difference(h, ell):
    """Trapezoid integral of ``J/rho`` over ``[-ell, ell]`` (snapped to the grid).

    Returns a ``numpy.longdouble``.
    """
    sl = _interval(h, ell)
    return _trapz(h.current[sl].astype(LD) / h.rho[sl].astype(LD), h.grid.dx)


def perturb_current(h, eps):
    """Uniform shift ``J -> J + eps``; the density is untouched."""
    return HydroField(h.grid, h.rho, h.current + eps, h.normalized)


def perturbed_phase_shift(h, ell, eps):
    """``eps * integral(1/rho)`` over the probe interval, as ``longdouble``."""
    sl = _interval(h, ell)
    return LD(eps) * _trapz(1 / h.rho[sl].astype(LD), h.grid.dx)


def _check_eps_n(eps, n_exponent):
    if not eps > 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    if int(n_exponent) != n_exponent or n_exponent < 2:
        raise ConfigurationError(f"N must be an integer >= 2, got {n_exponent}")


def predicted_shift(ell, eps, n_exponent):
    """Plateau estimate ``2 ell / eps^(N-1)``."""
    _check_eps_n(eps, n_exponent)
    return 2 * ell / eps ** (n_exponent - 1)


def general_perturbed_phase(h, ell, eps, n_exponent):
    """Approximation ``integral(J)/eps^N + 2 ell/eps^(N-1)`` for a density ``~eps^N`` on the gap."""
    _check_eps_n(eps, n_exponent)
    sl = _interval(h, ell)
    return _trapz(h.current[sl], h.grid.dx) / LD(eps) ** n_exponent + LD(
        predicted_shift(ell, eps, n_exponent))


def analytic_pair_phase(x, params):
    """Closed-form phase of the Gaussian-pair state.

    ``atan(sin(p0 x) / (phi_l/phi_r + cos(p0 x)))`` with ``phi_l, phi_r`` the
    left and right packet envelopes, evaluated quadrant-aware and unwrapped
    continuously in ``x``.  The branch is fixed by requiring the value at
    ``x = -L`` (inside the left packet, where the phase is ~0) to lie in
    ``(-pi, pi]``.
    """
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    anchor = -params.L
    lo = min(flat.min(initial=anchor), anchor)
    hi = max(flat.max(initial=anchor), anchor)
    step = 0.05 * params.sigma
    if params.p0:
        step = min(step, 0.25 / abs(params.p0))
    dense = np.linspace(lo, hi, max(2, int(np.ceil((hi - lo) / step)) + 1))
    path = np.unique(np.concatenate([dense, flat, [anchor]]))
    theta = np.unwrap(_wrapped_pair_phase(path, params))
    ia = np.searchsorted(path, anchor)
    wrapped = _wrapped_pair_phase(np.array([anchor]), params)[0]
    theta += wrapped - theta[ia]
    return theta[np.searchsorted(path, flat)].reshape(x.shape)


def _wrapped_pair_phase(x, params):
    # multiplying through by phi_r keeps the ratio finite when phi_r underflows
    left = params.phi((x + params.L) / 2)
    right = params.phi((x - params.L) / 2)
    arg = params.p0 * x
    return np.arctan2(right * np.sin(arg), left + right * np.cos(arg))


def unwrapped_phase(psi, max_step=0.75 * np.pi):
    """Phase of ``psi`` accumulated from ``x_min`` by adjacent increments.

    Increments larger than ``max_step`` mean the phase is not resolved by
    the grid and raise :class:`ConfigurationError`.
    """
    v = psi.values
    inc = np.angle(v[1:] * np.conj(v[:-1]))
    big = np.abs(inc) > max_step
    if np.any(big):
        i = int(np.argmax(big))
        raise ConfigurationError(
            f"phase step {inc[i]:.3f} at x={psi.grid.x[i]:.6g} is not resolved by the grid")
    return np.angle(v[0]) + np.concatenate([[0.0], np.cumsum(inc)])


@dataclass(frozen=True, eq=False)
class PlateauDensity:
    """Density equal to ``eps^N`` on ``[-ell, ell]`` with Gaussian shoulders outside.

    Outside the plateau ``rho = eps^N + A (s/w)^2 exp(-(s/w)^2/2)`` with
    ``s = |x| - ell`` and ``w`` the shoulder width; ``A`` carries the rest
    of the unit mass.  The plateau value itself is not rescaled.
    """

    epsilon: float
    n_exponent: int
    ell: float
    hydro: HydroField


def plateau_density(eps, n_exponent, ell, grid, shoulder_width=1.0, current=0.0):
    _check_eps_n(eps, n_exponent)
    if not ell > 0:
        raise ConfigurationError("ell must be positive")
    level = eps**n_exponent
    x = grid.x
    s = np.abs(x) - ell
    shoulder = np.where(s > 0, (s / shoulder_width) ** 2
                        * np.exp(-0.5 * (s / shoulder_width) ** 2), 0.0)
    rest = 1.0 - level * grid.length
    if rest <= 0 or shoulder.sum() == 0:
        raise ConfigurationError(
            f"plateau eps^N={level:g} leaves no mass for the shoulders on this grid")
    rho = level + rest * shoulder / (shoulder.sum() * grid.dx)
    rho[s <= 0] = level
    h = HydroField(grid, rho, np.full(grid.n, float(current)), normalized=True)
    return PlateauDensity(eps, int(n_exponent), ell, h)


def _log_midpoint_density(L, sigma, p0):
    # log of 2 e^{-a} / (2 sigma sqrt(pi) (1 + e^{-a - (p0 sigma)^2})), a = L^2/(4 sigma^2)
    a = L**2 / (4 * sigma**2)
    return (-a - np.log(sigma * np.sqrt(np.pi))
            - np.log1p(np.exp(-a - (p0 * sigma) ** 2)))


def calibrate_separation(eps, n_exponent, sigma, ell, p0=0.0):
    """Half-separation ``L`` at which the pair density at ``x = 0`` equals ``eps^N``.

    Bisection on the closed-form ``log rho(0)``, which decreases
    monotonically in ``L``, over ``L > ell``.  The result may still be too
    small for ``sigma <= L/5``; building a :class:`GaussianPairParams` from
    it then fails, which is the intended signal that the target density
    needs overlapping packets.
    """
    _check_eps_n(eps, n_exponent)
    if not sigma > 0 or ell < 0:
        raise ConfigurationError("sigma must be positive and ell non-negative")
    target = n_exponent * np.log(eps)
    lo = ell * (1 + 1e-12)

    def f(L):
        return _log_midpoint_density(L, sigma, p0) - target

    if f(lo) < 0:
        raise CalibrationError(
            f"target density eps^N={eps**n_exponent:g} exceeds the reachable "
            f"midpoint density {np.exp(f(lo) + target):g}")
    hi = 2 * sigma * np.sqrt(max(-target, 1.0)) + 10 * sigma + lo
    if f(hi) > 0 or target < -700:
        raise CalibrationError(f"target density eps^N={eps**n_exponent:g} is unreachable")
    return bisect(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)


def pair_grid(L, sigma, ell, n=4096):
    """Symmetric grid holding both packets; ``ell`` lands on a node when possible."""
    half = L + 12 * sigma
    dx = 2 * half / n
    if ell > 0:
        # shrink dx so that ell is an integer number of steps
        dx = ell / np.ceil(ell / dx)
        half = dx * n / 2
    return build_grid(-half, half, n)


@dataclass(frozen=True)
class InstabilityConfig:
    """Sweep settings.  ``profile`` is ``"plateau"`` or ``"gaussian_pair"``."""

    ell: float
    epsilons: tuple
    n_exponent: int
    profile: str = "plateau"
    sigma: float = 1.0
    p0: float = 0.0
    n: int = 4096
    box: float = 16.0
    shoulder_width: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        if self.profile not in ("plateau", "gaussian_pair"):
            raise ConfigurationError(f"unknown profile {self.profile!r}")
        if not self.ell > 0:
            raise ConfigurationError("ell must be positive")
        if not self.epsilons:
            raise ConfigurationError("at least one epsilon is required")
        for e in self.epsilons:
            _check_eps_n(e, self.n_exponent)
            if self.profile == "gaussian_pair" and not e < self.ell / (2 * self.sigma):
                raise ConfigurationError(
                    f"eps={e} must be below ell/(2 sigma)={self.ell / (2 * self.sigma)}")


@dataclass
class SweepRow:
    epsilon: float
    s_base: float
    s_perturbed: float
    delta_s_exact: float
    delta_s_predicted: float
    rel_err: float
    separation: float = float("nan")
    snap: float = 0.0
    s_general: float = float("nan")

    COLUMNS = ("epsilon", "s_base", "s_perturbed", "delta_s_exact",
               "delta_s_predicted", "rel_err")

    def as_row(self):
        return [getattr(self, c) for c in self.COLUMNS]


@dataclass
class PowerLawFit:
    slope: float = float("nan")
    intercept: float = float("nan")
    r_squared: float = float("nan")
    n_points: int = 0
    skipped: bool = False
    warning: str = ""

    def summary(self):
        return {"slope": self.slope, "intercept": self.intercept,
                "r_squared": self.r_squared, "n_points": self.n_points,
                "fit_skipped": self.skipped, "warning": self.warning}


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    fit: PowerLawFit = field(default_factory=PowerLawFit)


def fit_power_law(eps, delta):
    """Least-squares line through ``(log eps, log delta)``.

    Needs four distinct epsilons spanning two decades; otherwise the fit is
    skipped and flagged.
    """
    eps = np.asarray(eps, dtype=float)
    delta = np.asarray(delta, dtype=float)
    distinct = np.unique(eps)
    if len(distinct) < 4 or np.log10(distinct.max() / distinct.min()) < 2 - 1e-12:
        return PowerLawFit(n_points=len(eps), skipped=True,
                           warning="need >= 4 distinct epsilons spanning >= 2 decades")
    if np.any(delta <= 0):
        return PowerLawFit(n_points=len(eps), skipped=True,
                           warning="non-positive phase shift, log fit impossible")
    lx, ly = np.log(eps), np.log(delta)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(slope), float(intercept), float(r2), len(eps))


def _profile(cfg, eps):
    if cfg.profile == "plateau":
        half = cfg.box
        grid = build_grid(-half, half, cfg.n)
        h = plateau_density(eps, cfg.n_exponent, cfg.ell, grid, cfg.shoulder_width).hydro
        return h, float("nan")
    L = calibrate_separation(eps, cfg.n_exponent, cfg.sigma, cfg.ell, cfg.p0)
    params = GaussianPairParams(L, cfg.sigma, cfg.p0)
    grid = pair_grid(L, cfg.sigma, cfg.ell, cfg.n)
    return to_hydro(gaussian_pair(params, grid)), L


def sweep_point(cfg, eps):
    h, L = _profile(cfg, eps)
    base = phase_difference(h, cfg.ell)
    pert = phase_difference(perturb_current(h, eps), cfg.ell)
    exact = pert - base
    pred = predicted_shift(cfg.ell, eps, cfg.n_exponent)
    return SweepRow(eps, float(base), float(pert), float(exact), pred,
                    float((exact - LD(pred)) / LD(pred)), L,
                    snap_interval(h.grid, cfg.ell)[2],
                    float(general_perturbed_phase(h, cfg.ell, eps, cfg.n_exponent)))


def worker_count():
    """Worker cap from ``QHLAB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("QHLAB_THREADS", "1")))
    except ValueError:
        return 1


def epsilon_sweep(cfg, workers=None):
    """Phase shift for every epsilon plus a log-log power-law fit.

    Points are independent and evaluated concurrently; rows come back
    sorted by epsilon.
    """
    workers = workers or worker_count()
    eps = sorted(set(cfg.epsilons))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda e: sweep_point(cfg, e), eps))
    else:
        rows = [sweep_point(cfg, e) for e in eps]
    fit = fit_power_law([r.epsilon for r in rows], [r.delta_s_exact for r in rows])
    if fit.skipped:
        log.warning("power-law fit skipped: %s", fit.warning)
    return SweepResult(rows, fit)
