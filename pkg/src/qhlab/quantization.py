"""Series solutions, termination conditions and divergence diagnostics.

Eigenvalues appear when a two-step coefficient recurrence terminates.
Termination is an exact algebraic event, so ratios are computed with
:class:`fractions.Fraction` (a float converts to the exact binary value it
holds).  Tail diagnostics that need magnitudes work with floats in log
space.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import exp, log

import numpy as np
from scipy.integrate import quad
from scipy.linalg import eigh_tridiagonal

from .errors import ConfigurationError, SpecError
from .hydro import quantum_potential_from_amplitude


def _q(v):
    """Exact rational for ints, Fractions and floats."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    v = float(v)
    if not np.isfinite(v):
        raise ConfigurationError(f"non-finite parameter {v}")
    return Fraction(v)


def _check_j(j):
    if int(j) != j or j < 0:
        raise ConfigurationError(f"index must be a non-negative integer, got {j}")
    return int(j)


@dataclass(frozen=True)
class RecurrenceSpec:
    """Coefficients ``C0, C1, C2, C4`` and the sequence ``b_j/alpha_j``.

    ``b_over_alpha`` is a callable ``j -> value`` or a mapping; missing
    entries of a mapping count as zero.
    """

    c0: object
    c1: object = 0
    c2: object = 0
    c4: object = 0
    b_over_alpha: object = None

    def __post_init__(self):
        for name in ("c0", "c1", "c2", "c4"):
            object.__setattr__(self, name, _q(getattr(self, name)))
        if self.c0 == 0:
            raise SpecError("c0 must be non-zero")

    def b(self, j):
        b = self.b_over_alpha
        if b is None:
            return Fraction(0)
        if callable(b):
            return _q(b(j))
        return _q(b.get(j, 0))


def hermite_spec():
    """Spec for which the energy formula gives ``E_j = 2j + 1``.

    ``b_j/alpha_j = 4j + 2`` is chosen for that purpose; it is a worked
    example, not a derivation of ``b_j``.
    """
    return RecurrenceSpec(1, -1, -1, 0, lambda j: 4 * j + 2)


def ee3_ratio(j, E, spec):
    """``alpha_{j+2}/alpha_j`` from the generic coefficient balance, as a Fraction."""
    j = _check_j(j)
    num = spec.c2 + 2 * j * spec.c1 - (_q(E) - spec.c4) * spec.c0 + spec.b(j)
    return -num / ((j + 1) * (j + 2) * spec.c0)


def ee4_energy(j, spec):
    """Energy that zeroes the numerator of :func:`ee3_ratio` at index ``j``."""
    j = _check_j(j)
    return spec.c4 + (spec.c2 + spec.b(j) + 2 * spec.c1 * j) / spec.c0


def hermite_ratio(j, E):
    """``alpha_{j+2}/alpha_j`` for ``R = sum(alpha_j x^j) exp(-x^2/2)`` in ``V = x^2``."""
    j = _check_j(j)
    return (2 * j + 1 - _q(E)) / ((j + 1) * (j + 2))


def terminating_energies(j_max):
    """Energies ``2j + 1`` (exact integers) that terminate the Hermite series."""
    return [2 * j + 1 for j in range(_check_j(j_max) + 1)]


@dataclass(frozen=True, eq=False)
class SeriesState:
    """Coefficients of one parity branch; zero beyond ``termination_index``."""

    coefficients: tuple
    termination_index: int | None = None

    def __post_init__(self):
        c = tuple(self.coefficients)
        object.__setattr__(self, "coefficients", c)
        t = self.termination_index
        if t is not None:
            scale = max((abs(float(a)) for a in c[:t + 1]), default=1.0) or 1.0
            if any(abs(float(a)) > 1e-14 * scale for a in c[t + 1:]):
                raise ConfigurationError("coefficients beyond the termination index")


def build_series(ratio, parity, j_max):
    """Exact coefficients of one parity branch from ``a_parity = 1`` up to ``j_max``."""
    if parity not in (0, 1):
        raise ConfigurationError("parity must be 0 or 1")
    coeffs = [Fraction(0)] * (_check_j(j_max) + 1)
    a, stop = Fraction(1), None
    for j in range(parity, j_max + 1, 2):
        coeffs[j] = a
        a *= ratio(j)
        if a == 0 and stop is None:
            stop = j
            break
    return SeriesState(tuple(coeffs), stop)


@dataclass
class BranchDiagnosis:
    """One parity branch: exact termination plus a log-space partial sum."""

    parity: int
    terminates: bool
    termination_index: int | None
    log_partial_sum: float
    sign: float
    log_partial_sums: np.ndarray = field(repr=False, default=None)
    tail_constant: float = 0.0


@dataclass
class TailDiagnosis:
    """Both branches plus the headline numbers.

    The headline reports the terminating branch when there is one, and
    otherwise the branch with the smaller partial sum, so that a large
    value means every series solution blows up.
    """

    parameter: float
    probe: float
    j_cut: int
    even: BranchDiagnosis
    odd: BranchDiagnosis

    def _headline(self):
        for b in (self.even, self.odd):
            if b.terminates:
                return b
        return min((self.even, self.odd), key=lambda b: b.log_partial_sum)

    @property
    def terminates(self):
        return self._headline().terminates

    @property
    def diverges(self):
        return not self.terminates

    @property
    def termination_index(self):
        return self._headline().termination_index

    @property
    def log_partial_sum(self):
        return self._headline().log_partial_sum

    def row(self):
        return [self.parameter, self.terminates, self.termination_index,
                self.log_partial_sum]


DIAGNOSIS_COLUMNS = ("parameter", "terminates", "termination_index", "log_partial_sum")


def _branch(parity, ratio, x, j_cut, log_weight=0.0):
    """Build coefficients from ``a_parity = 1`` and sum ``a_j x^j`` in log space.

    ``ratio(j)`` returns the exact ``a_{j+2}/a_j``.  The running sum is kept
    as ``s * exp(m)`` so no term overflows.
    """
    lx = log(abs(x))
    sx = 1.0 if x > 0 else -1.0
    la, sa = 0.0, 1.0
    m, s = -np.inf, 0.0
    sums = []
    term_at = None
    tail = 0.0
    for j in range(parity, j_cut + 1, 2):
        lt = la + j * lx
        st = sa * sx**j
        if lt > m:
            s = s * exp(m - lt) + st if np.isfinite(m) else st
            m = lt
        else:
            s += st * exp(lt - m)
        sums.append(m + log(abs(s)) if s != 0 else -np.inf)
        r = ratio(j)
        if r == 0:
            term_at = j
            break
        la += log(abs(float(r)))
        sa *= 1.0 if r > 0 else -1.0
        tail = (j + 2) * sa * exp(la) if la > -700 else 0.0
    sums = np.array(sums) + log_weight
    return BranchDiagnosis(parity, term_at is not None, term_at, float(sums[-1]),
                           float(np.sign(s)), sums, 0.0 if term_at is not None else tail)


def series_tail_diagnosis(E, x_probe, j_cut):
    """Termination or blow-up of the Hermite series for energy ``E``.

    The partial sum is ``R(x_probe) = sum_{j <= j_cut} alpha_j x^j exp(-x^2/2)``
    for each parity branch; ``log_partial_sum`` is its natural log.
    """
    if x_probe == 0:
        raise ConfigurationError("x_probe must be non-zero")
    if _check_j(j_cut) < 20:
        raise ConfigurationError("j_cut must be at least 20")
    E = _q(E)
    w = -0.5 * x_probe**2
    even, odd = (_branch(p, lambda j: hermite_ratio(j, E), x_probe, j_cut, w) for p in (0, 1))
    return TailDiagnosis(float(E), float(x_probe), j_cut, even, odd)


def hermite_amplitude(j, x):
    """Eigenfunction of ``V = x^2`` at ``E = 2j + 1`` built from the terminated series."""
    j = _check_j(j)
    E = 2 * j + 1
    coeffs = np.zeros(j + 1)
    a = Fraction(1)
    for i in range(j % 2, j + 1, 2):
        coeffs[i] = float(a)
        a *= hermite_ratio(i, E)
    x = np.asarray(x, dtype=float)
    return np.polynomial.polynomial.polyval(x, coeffs) * np.exp(-0.5 * x**2)


def bridge_residual(j, grid):
    """``V + Q + S'^2 - E_j`` for the real level-``j`` eigenfunction of ``V = x^2``.

    ``Q`` comes from the signed amplitude so that nodes do not produce
    kinks; the residual is ``nan`` at exact zeros.
    """
    r = hermite_amplitude(j, grid.x)
    q = quantum_potential_from_amplitude(r, grid)
    return grid.x**2 + q - (2 * j + 1)


def discretized_spectrum(v, grid, k):
    """Lowest ``k`` eigenvalues of the three-point ``-d^2/dx^2 + V``.

    Dirichlet walls sit at ``x_min`` and ``x_max``; the unknowns are the
    ``n - 1`` interior points ``x_1 .. x_{n-1}``.
    """
    if int(k) != k or k < 1 or k > grid.n // 4:
        raise ConfigurationError(f"k must be in [1, n/4], got {k}")
    h2 = grid.dx**2
    diag = 2.0 / h2 + v.values[1:]
    off = np.full(grid.n - 2, -1.0 / h2)
    return eigh_tridiagonal(diag, off, eigvals_only=True, select="i",
                            select_range=(0, int(k) - 1))


def legendre_ratio(j, lam):
    """``a_{j+2}/a_j`` of the polar series in ``u = cos(theta)``, as a Fraction."""
    j = _check_j(j)
    return -(-j * (j + 1) + _q(lam)) / ((j + 1) * (j + 2))


def quantized_lambda(j):
    j = _check_j(j)
    return j * (j + 1)


LEGENDRE_PROBE = 1 - 1e-6


def legendre_tail_diagnosis(lam, j_cut, u=LEGENDRE_PROBE):
    """Termination or edge divergence of the polar series for ``lambda``.

    Off the lattice the ratio tends to ``1 - 2/j``, so ``a_j ~ C/j`` and
    the series diverges like ``-C log(1 - u)`` at ``u -> 1``.  Partial sums
    at a fixed ``u`` grow only logarithmically, so the branch also reports
    ``tail_constant = j a_j`` at the cut: non-zero means divergence.
    """
    if _check_j(j_cut) < 20:
        raise ConfigurationError("j_cut must be at least 20")
    lam = _q(lam)
    even, odd = (_branch(p, lambda j: legendre_ratio(j, lam), u, j_cut) for p in (0, 1))
    return TailDiagnosis(float(lam), float(u), j_cut, even, odd)


@dataclass(frozen=True)
class AngularSolution:
    j: int
    lam: float
    radial_coeff: float
    quantized: bool = False

    def __post_init__(self):
        if self.quantized and self.lam != quantized_lambda(self.j):
            raise ConfigurationError("quantized solution needs lambda = j(j+1)")


@dataclass
class RadialSolution:
    r: np.ndarray
    R: np.ndarray
    residual_eq1: np.ndarray
    residual_eq2: np.ndarray

    def rows(self):
        return list(zip(self.r, self.R, self.residual_eq1, self.residual_eq2))


def radial_solution(lam, c1, r_samples):
    """``R = c1 r^(lambda/2)`` with the residuals of ``2 r R' = lambda R`` and ``r S' = 0``."""
    r = np.asarray(r_samples, dtype=float)
    if np.any(r <= 0):
        raise ConfigurationError("radii must be positive")
    lam = float(lam)
    R = c1 * r ** (lam / 2)
    dR = c1 * (lam / 2) * r ** (lam / 2 - 1)
    dS = np.zeros_like(r)
    return RadialSolution(r, R, 2 * r * dR - lam * R, r * dS)


def angular_imaginary_residual(m, theta_samples, phi_samples, amplitude=np.sin, h=1e-6):
    """Largest imaginary-part residual for ``S = m phi`` and ``R = amplitude(theta)``.

    Evaluates ``sin(t)(cos(t) S_t + sin(t)(S_tt R + 2 S_t R_t)) + S_pp R + 2 S_p R_p``
    on the sample grid.  ``R_t`` is a central difference with step ``h``.
    """
    t, p = np.meshgrid(np.asarray(theta_samples, float), np.asarray(phi_samples, float),
                       indexing="ij")
    R = np.asarray(amplitude(t), dtype=float) * np.ones_like(t)
    R_t = (np.asarray(amplitude(t + h)) - np.asarray(amplitude(t - h))) / (2 * h)
    R_p = np.zeros_like(t)
    S_t = np.zeros_like(t)
    S_tt = np.zeros_like(t)
    S_p = np.full_like(t, float(m))
    S_pp = np.zeros_like(t)
    res = (np.sin(t) * (np.cos(t) * S_t + np.sin(t) * (S_tt * R + 2 * S_t * R_t))
           + S_pp * R + 2 * S_p * R_p)
    return float(np.max(np.abs(res)))


@dataclass
class WitnessReport:
    m: float
    rho_single_valued: bool
    current_single_valued: bool
    wavefunction_single_valued: bool


def nonquantized_m_witness(m, radial_profile=lambda r: r * np.exp(-r * r / 2),
                           r_samples=None, phi_samples=None, tol=1e-9):
    """Compare ``rho``, ``J_phi`` and ``psi = R(r) exp(i m phi)`` at ``phi`` and ``phi + 2 pi``."""
    out = quad(lambda r: radial_profile(r) ** 2 * r, 0, np.inf, full_output=1)
    mass = out[0]
    if len(out) > 3 or not np.isfinite(mass) or mass <= 0:
        raise ConfigurationError("radial profile is not square-integrable on the plane")
    r = np.linspace(0.1, 5.0, 50) if r_samples is None else np.asarray(r_samples, float)
    p = np.linspace(0, 2 * np.pi, 33) if phi_samples is None else np.asarray(phi_samples, float)
    rr, pp = np.meshgrid(r, p, indexing="ij")
    R = radial_profile(rr)

    def psi(phi):
        return R * np.exp(1j * m * phi)

    def rho(phi):
        return np.abs(psi(phi)) ** 2

    def j_phi(phi):
        # J_phi = Im(conj(psi) dpsi/dphi) / r
        return np.imag(np.conj(psi(phi)) * 1j * m * psi(phi)) / rr

    def same(a, b):
        return bool(np.all(np.abs(a - b) <= tol * np.maximum(1.0, np.abs(a))))

    shifted = pp + 2 * np.pi
    return WitnessReport(float(m), same(rho(pp), rho(shifted)),
                         same(j_phi(pp), j_phi(shifted)), same(psi(pp), psi(shifted)))
