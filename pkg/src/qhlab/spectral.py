"""FFT derivatives on a periodic :class:`~qhlab.fields.Grid1D`."""

from functools import lru_cache

import numpy as np


def wavenumbers(grid):
    """Angular wavenumbers in FFT order, ``2*pi*fftfreq(n, dx)``."""
    return _wavenumbers(grid.n, grid.dx)


@lru_cache(maxsize=32)
def _wavenumbers(n, dx):
    k = 2 * np.pi * np.fft.fftfreq(n, dx)
    k.flags.writeable = False
    return k


@lru_cache(maxsize=32)
def _rwavenumbers(n, dx):
    k = 2 * np.pi * np.fft.rfftfreq(n, dx)
    k.flags.writeable = False
    return k


def derivative(f, grid, order=1):
    """Spectral derivative of periodic samples ``f``.

    Real input stays real.  The Nyquist coefficient is dropped for odd
    orders so that the derivative of a real signal is real.
    """
    f = np.asarray(f)
    n = grid.n
    if np.iscomplexobj(f):
        k = _wavenumbers(n, grid.dx)
        mult = (1j * k) ** order
        if order % 2:
            mult = mult.copy()
            mult[n // 2] = 0.0
        return np.fft.ifft(mult * np.fft.fft(f))
    k = _rwavenumbers(n, grid.dx)
    mult = (1j * k) ** order
    if order % 2:
        mult = mult.copy()
        mult[-1] = 0.0
    return np.fft.irfft(mult * np.fft.rfft(f), n)


@lru_cache(maxsize=32)
def _quadratic_projector(n, x_min, dx):
    # least-squares projector onto {1, s, s^2}, s the centred and scaled coordinate
    half = 0.5 * n * dx
    x = x_min + dx * np.arange(n)
    centre = x_min + half
    s = (x - centre) / half
    basis = np.stack([np.ones(n), s, s * s], axis=1)
    proj = np.linalg.pinv(basis)
    for a in (basis, proj):
        a.flags.writeable = False
    return basis, proj, centre, half


def detrended_derivatives(f, grid):
    """First and second derivatives of a real, possibly non-periodic ``f``.

    A least-squares quadratic is removed and differentiated exactly; the
    remainder is differentiated spectrally.  Quadratic profiles (log
    density and phase of any Gaussian state) are therefore differentiated
    to round-off even though their periodic extension has kinks.
    """
    f = np.asarray(f, dtype=float)
    basis, proj, centre, half = _quadratic_projector(grid.n, grid.x_min, grid.dx)
    c = proj @ f
    rem = f - basis @ c
    s = (grid.x - centre) / half
    d1 = (c[1] + 2 * c[2] * s) / half + derivative(rem, grid, 1)
    d2 = 2 * c[2] / half**2 + derivative(rem, grid, 2)
    return d1, d2
