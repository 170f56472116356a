import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qhlab.errors import ConfigurationError, NodeError
from qhlab.fields import (
    ComplexField, GaussianPairParams, HydroField, build_grid, from_hydro, gaussian_pair,
    norm, pair_norm_const, to_hydro)
from qhlab.instability import analytic_pair_phase
from qhlab.spectral import derivative

from .conftest import gaussian_values


def test_build_grid_spacing():
    g = build_grid(-20, 20, 1024)
    assert g.dx == 40 / 1024
    assert g.x[0] == -20 and len(g.x) == 1024
    assert g.x[-1] == pytest.approx(20 - g.dx)


@pytest.mark.parametrize("args", [(-20, 20, 1000), (0, 0, 64), (1, 0, 64), (0, 1, 8),
                                  (0, np.inf, 64), (0, 1, 64.5)])
def test_build_grid_rejects(args):
    with pytest.raises(ConfigurationError):
        build_grid(*args)


def test_grid_x_is_read_only():
    g = build_grid(0, 1, 16)
    with pytest.raises(ValueError):
        g.x[0] = 3.0


def test_index_of_reports_snap():
    g = build_grid(-1, 1, 16)
    i, d = g.index_of(0.1)
    assert g.x[i] == 0.125 and d == pytest.approx(0.025)


def test_complex_field_validation():
    g = build_grid(0, 1, 16)
    with pytest.raises(ConfigurationError):
        ComplexField(g, np.ones(8))
    with pytest.raises(ConfigurationError):
        ComplexField(g, np.full(16, np.nan))
    with pytest.raises(ConfigurationError):
        ComplexField(g, 2 * np.ones(16), normalized=True)
    f = ComplexField(g, np.ones(16) * 3).normalize()
    assert f.normalized and norm(f) == pytest.approx(1, abs=1e-12)


def test_field_values_are_immutable():
    g = build_grid(0, 1, 16)
    f = ComplexField(g, np.ones(16))
    with pytest.raises(ValueError):
        f.values[0] = 2


def test_hydro_field_validation():
    g = build_grid(0, 1, 16)
    with pytest.raises(ConfigurationError):
        HydroField(g, -np.ones(16), np.zeros(16))
    with pytest.raises(ConfigurationError):
        HydroField(g, np.ones(16) * 2, np.zeros(16), normalized=True)
    h = HydroField(g, np.r_[0.0, np.ones(15)], np.zeros(16))
    with pytest.raises(NodeError):
        h.velocity()


def test_norm_examples():
    g = build_grid(-5, 5, 64)
    assert norm(ComplexField(g, np.zeros(64))) == 0
    f = ComplexField(g, gaussian_values(g))
    assert norm(ComplexField(g, 2 * f.values)) == pytest.approx(4 * norm(f), rel=1e-15)
    assert abs(norm(f.normalize()) - 1) <= 1e-12


def test_pair_params_validation():
    with pytest.raises(ConfigurationError):
        GaussianPairParams(10, 3, 2)
    with pytest.raises(ConfigurationError):
        GaussianPairParams(-1, 0.1, 2)
    GaussianPairParams(10, 2, 0)


def test_gaussian_pair_overflow():
    p = GaussianPairParams(10, 1, 2)
    with pytest.raises(ConfigurationError):
        gaussian_pair(p, build_grid(-15, 15, 1024))
    with pytest.raises(ConfigurationError):
        gaussian_pair(p, build_grid(-40, 40, 1024), direction=0)


def test_gaussian_pair_real_when_no_momentum():
    p = GaussianPairParams(10, 1, 0)
    psi = gaussian_pair(p, build_grid(-40, 40, 4096))
    assert np.all(psi.values.imag == 0)
    assert np.max(np.abs(to_hydro(psi).current)) < 1e-15


def test_gaussian_pair_midpoint_density(pair_params):
    g = build_grid(-40, 40, 4096)
    psi = gaussian_pair(pair_params, g)
    assert psi.normalized
    i, d = g.index_of(0.0)
    assert d == 0
    # direct evaluation with the grid normalizer
    p = pair_norm_const(pair_params, g)
    direct = abs(p.norm_const * pair_params.amplitude(0.0)) ** 2
    assert abs(psi.values[i]) ** 2 == pytest.approx(direct, rel=1e-12)
    # and with the closed-form normalizer
    assert abs(psi.values[i]) ** 2 == pytest.approx(pair_params.density(0.0), rel=1e-10)


def test_plane_wave_current():
    g = build_grid(0, 2 * np.pi, 64)
    p0 = 3.0
    psi = ComplexField(g, np.exp(1j * p0 * g.x) / np.sqrt(g.length), True)
    h = to_hydro(psi)
    assert np.allclose(h.rho, 1 / g.length, rtol=1e-14)
    assert np.allclose(h.current, p0 * h.rho, rtol=1e-12)


def test_real_gaussian_has_no_current():
    g = build_grid(-10, 10, 256)
    h = to_hydro(ComplexField(g, np.exp(-g.x**2)))
    assert np.max(np.abs(h.current)) < 1e-15


def test_pair_velocity_matches_analytic_phase(pair_params, pair_grid):
    h = to_hydro(gaussian_pair(pair_params, pair_grid))
    i, _ = pair_grid.index_of(0.0)
    # derivative of the analytic phase at x = 0 by a fine central difference
    d = 1e-5
    s = analytic_pair_phase(np.array([-d, d]), pair_params)
    assert h.current[i] / h.rho[i] == pytest.approx((s[1] - s[0]) / (2 * d), rel=1e-7)


def test_from_hydro_plane_wave():
    g = build_grid(0, 2 * np.pi, 64)
    rho = np.full(64, 1 / g.length)
    h = HydroField(g, rho, 2.0 * rho)
    psi = from_hydro(h, 0.0)
    assert np.allclose(psi.values, np.sqrt(rho) * np.exp(2j * (g.x - g.x_min)), atol=1e-14)


def test_from_hydro_rejects_nodes():
    g = build_grid(0, 1, 16)
    with pytest.raises(NodeError):
        from_hydro(HydroField(g, np.r_[0.0, np.ones(15)], np.zeros(16)))


def periodized_drifting_gaussian(n=4096, std=3.0, modes=5):
    g = build_grid(-4 * np.pi, 4 * np.pi, n)
    p0 = 2 * np.pi * modes / g.length
    amp = sum(np.exp(-(g.x - k * g.length) ** 2 / (2 * std**2)) for k in range(-3, 4))
    return ComplexField(g, amp * np.exp(1j * p0 * g.x)).normalize()


def test_round_trip_drifting_gaussian():
    psi = periodized_drifting_gaussian()
    back = from_hydro(to_hydro(psi), np.angle(psi.values[0]))
    assert back.normalized
    assert np.max(np.abs(back.values - psi.values)) < 1e-10


def test_round_trip_converges_for_curved_phase():
    # non-constant velocity: the cumulative trapezoid is second order in dx
    errs = []
    for n in (256, 512):
        g = build_grid(-np.pi, np.pi, n)
        psi = ComplexField(g, (1.5 + np.cos(g.x)) * np.exp(1j * np.sin(g.x))).normalize()
        back = from_hydro(to_hydro(psi), np.angle(psi.values[0]))
        errs.append(np.max(np.abs(back.values - psi.values)))
    assert errs[0] / errs[1] > 3.9


@given(theta=st.floats(-10, 10), p0=st.floats(-3, 3), c=st.floats(-2, 2))
def test_gauge_invariance(theta, p0, c):
    g = build_grid(-16, 16, 256)
    psi = ComplexField(g, gaussian_values(g, c, 1.5, p0))
    a, b = to_hydro(psi), to_hydro(psi.with_phase(theta))
    assert np.allclose(a.rho, b.rho, rtol=1e-14, atol=1e-300)
    assert np.allclose(a.current, b.current, rtol=1e-12, atol=1e-14)


@given(st.lists(st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
                min_size=16, max_size=16))
def test_density_nonnegative_and_integrates_to_norm(vals):
    g = build_grid(0, 1, 16)
    psi = ComplexField(g, vals)
    h = to_hydro(psi)
    assert np.all(h.rho >= 0)
    assert h.mass() == pytest.approx(norm(psi), rel=1e-12, abs=1e-300)


def test_spectral_derivative_of_sine():
    g = build_grid(0, 2 * np.pi, 64)
    assert np.allclose(derivative(np.sin(3 * g.x), g), 3 * np.cos(3 * g.x), atol=1e-12)
    assert np.allclose(derivative(np.sin(3 * g.x), g, 2), -9 * np.sin(3 * g.x), atol=1e-11)
