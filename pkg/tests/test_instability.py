import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qhlab.errors import CalibrationError, ConfigurationError, NodeError
from qhlab.fields import (
    ComplexField, GaussianPairParams, HydroField, build_grid, gaussian_pair, to_hydro)
from qhlab.instability import (
    InstabilityConfig, analytic_pair_phase, calibrate_separation, epsilon_sweep,
    fit_power_law, general_perturbed_phase, pair_grid, perturb_current,
    perturbed_phase_shift, phase_difference, plateau_density, predicted_shift, snap_interval,
    unwrapped_phase, worker_count)


PAIR = GaussianPairParams(10.0, 1.0, 2.0)
PAIR_HYDRO = to_hydro(gaussian_pair(PAIR, build_grid(-40.96, 40.96, 4096)))


@pytest.fixture
def pair_hydro(pair_params, pair_grid):
    return to_hydro(gaussian_pair(pair_params, pair_grid))


def plane_wave(p0, n=256):
    g = build_grid(-np.pi, np.pi, n)
    return to_hydro(ComplexField(g, np.exp(1j * p0 * g.x)).normalize())


def test_phase_difference_plane_wave():
    h = plane_wave(3.0)
    ell = 1.0
    ia, ib, _ = snap_interval(h.grid, ell)
    span = h.grid.x[ib] - h.grid.x[ia]
    assert float(phase_difference(h, ell)) == pytest.approx(3.0 * span, rel=1e-12)


def test_phase_difference_real_field_is_zero(pair_grid):
    h = to_hydro(gaussian_pair(GaussianPairParams(10, 1, 0), pair_grid))
    assert phase_difference(h, 1.0) == 0


def test_phase_difference_matches_analytic_phase(pair_hydro, pair_params):
    s = analytic_pair_phase(np.array([-1.0, 1.0]), pair_params)
    assert float(phase_difference(pair_hydro, 1.0)) == pytest.approx(s[1] - s[0], abs=1e-8)


def test_snap_distance_reported():
    g = build_grid(-40, 40, 4096)
    assert snap_interval(g, 2.0)[2] == pytest.approx(0.0078125)
    assert snap_interval(build_grid(-40.96, 40.96, 4096), 1.0)[2] == 0


def test_node_in_interval_raises():
    g = build_grid(-1, 1, 64)
    rho = np.ones(64) / 2
    rho[32] = 0.0
    with pytest.raises(NodeError):
        phase_difference(HydroField(g, rho, np.zeros(64)), 0.5)
    with pytest.raises(NodeError):
        perturbed_phase_shift(HydroField(g, rho, np.zeros(64)), 0.5, 0.1)


def test_perturb_current_examples(pair_hydro):
    same = perturb_current(pair_hydro, 0.0)
    assert np.array_equal(same.current, pair_hydro.current)
    back = perturb_current(perturb_current(pair_hydro, 0.25), -0.25)
    assert np.allclose(back.current, pair_hydro.current, rtol=0, atol=1e-15)
    assert np.array_equal(back.rho, pair_hydro.rho)
    h = plane_wave(3.0)
    v = perturb_current(h, 0.5).velocity()
    assert np.allclose(v, 3.0 + 0.5 / h.rho, rtol=1e-12)


def test_shift_constant_density():
    g = build_grid(-2, 2, 512)
    c = 0.25
    h = HydroField(g, np.full(512, c), np.zeros(512))
    ia, ib, _ = snap_interval(g, 1.0)
    span = g.x[ib] - g.x[ia]
    assert float(perturbed_phase_shift(h, 1.0, 0.3)) == pytest.approx(span * 0.3 / c, rel=1e-14)


def test_shift_on_plateau_example():
    g = build_grid(-16, 16, 4096)
    h = plateau_density(0.1, 2, 1.0, g).hydro
    assert float(perturbed_phase_shift(h, 1.0, 0.1)) == pytest.approx(20.0, rel=1e-12)


def test_pair_shift_against_refined_grid(pair_params, pair_hydro):
    fine = build_grid(-40.96, 40.96, 2**16)
    ref = perturbed_phase_shift(to_hydro(gaussian_pair(pair_params, fine)), 1.0, 1e-4)
    got = perturbed_phase_shift(pair_hydro, 1.0, 1e-4)
    assert float(got) == pytest.approx(float(ref), rel=1e-4)


def test_predicted_shift_examples():
    assert predicted_shift(1, 0.1, 2) == pytest.approx(20)
    assert predicted_shift(1, 0.01, 3) == pytest.approx(20000)
    assert predicted_shift(0, 0.3, 4) == 0
    for eps, n in ((0, 2), (0.1, 1), (0.1, 2.5)):
        with pytest.raises(ConfigurationError):
            predicted_shift(1, eps, n)


def test_general_phase_examples():
    g = build_grid(-16, 16, 4096)
    h = plateau_density(0.1, 3, 1.0, g).hydro
    assert float(general_perturbed_phase(h, 1.0, 0.1, 3)) == pytest.approx(
        predicted_shift(1.0, 0.1, 3), rel=1e-14)
    j0 = 1e-3
    hj = plateau_density(0.1, 3, 1.0, g, current=j0).hydro
    expected = j0 * 2 / 0.1**3 + 2 / 0.1**2
    assert float(general_perturbed_phase(hj, 1.0, 0.1, 3)) == pytest.approx(expected, rel=1e-12)


def test_general_phase_is_approximate_for_pair(pair_hydro):
    exact = float(perturbed_phase_shift(pair_hydro, 1.0, 1e-3))
    approx = float(general_perturbed_phase(pair_hydro, 1.0, 1e-3, 2))
    assert np.isfinite(approx) and approx != pytest.approx(exact, rel=1e-3)


@given(eps=st.floats(1e-8, 1e-3), ell=st.sampled_from([0.5, 1.0, 2.0]))
def test_exact_identity(eps, ell):
    h = PAIR_HYDRO
    lhs = phase_difference(perturb_current(h, eps), ell) - phase_difference(h, ell)
    rhs = perturbed_phase_shift(h, ell, eps)
    assert abs(float(lhs - rhs)) <= 1e-9


@given(eps=st.floats(1e-3, 1.0), ell=st.sampled_from([0.5, 1.0, 2.0]))
def test_exact_identity_large_shift(eps, ell):
    # shifts reach 1e8 to 1e11 here; the bound is set by extended-precision round-off
    h = PAIR_HYDRO
    lhs = phase_difference(perturb_current(h, eps), ell) - phase_difference(h, ell)
    rhs = perturbed_phase_shift(h, ell, eps)
    assert abs(float(lhs / rhs) - 1) <= 1e-16


@given(eps=st.floats(1e-6, 0.5), n=st.integers(2, 4))
def test_exact_identity_on_plateau(eps, n):
    g = build_grid(-16, 16, 2048)
    h = plateau_density(eps, n, 1.0, g).hydro if eps**n * 32 < 1 else None
    if h is None:
        return
    lhs = phase_difference(perturb_current(h, eps), 1.0) - phase_difference(h, 1.0)
    assert abs(float(lhs - perturbed_phase_shift(h, 1.0, eps))) <= 1e-9 * max(
        1.0, float(perturbed_phase_shift(h, 1.0, eps)))


@given(eps=st.floats(1e-6, 1e-1))
def test_shift_is_linear_in_eps(eps):
    h = PAIR_HYDRO
    a = perturbed_phase_shift(h, 1.0, eps)
    b = perturbed_phase_shift(h, 1.0, 2 * eps)
    assert b == 2 * a


@pytest.mark.parametrize("n_exp,ell", [(2, 1.0), (3, 1.0), (2, 2.0), (4, 0.5)])
def test_plateau_law_exact(n_exp, ell):
    g = build_grid(-16, 16, 4096)
    for eps in (0.1, 0.03, 0.01):
        h = plateau_density(eps, n_exp, ell, g).hydro
        assert float(perturbed_phase_shift(h, ell, eps)) == pytest.approx(
            predicted_shift(ell, eps, n_exp), rel=1e-12)


def test_shape_independence():
    g = build_grid(-16, 16, 4096)
    a = plateau_density(0.05, 3, 1.0, g, shoulder_width=0.5).hydro
    b = plateau_density(0.05, 3, 1.0, g, shoulder_width=3.0).hydro
    assert not np.allclose(a.rho, b.rho)
    sa, sb = perturbed_phase_shift(a, 1.0, 0.05), perturbed_phase_shift(b, 1.0, 0.05)
    assert abs(float(sa / sb) - 1) <= 1e-12


def test_plateau_invariants():
    g = build_grid(-16, 16, 4096)
    p = plateau_density(0.1, 2, 1.0, g)
    inside = np.abs(g.x) <= 1.0
    assert np.all(p.hydro.rho[inside] == 0.1**2)
    assert np.all(p.hydro.rho >= 0.1**2)
    assert p.hydro.mass() == pytest.approx(1.0, rel=1e-12)
    assert np.max(np.abs(np.diff(p.hydro.rho))) < 1e-2
    with pytest.raises(ConfigurationError):
        plateau_density(0.5, 2, 1.0, g)


def test_analytic_phase_examples(pair_params):
    x = np.linspace(-5, 5, 101)
    assert np.all(analytic_pair_phase(x, GaussianPairParams(10, 1, 0)) == 0)
    # at x = -ell the left packet dominates; the phase is bounded by the envelope ratio
    for L in (10.0, 20.0):
        p = GaussianPairParams(L, 1.0, 2.0)
        ratio = p.phi((-1.0 - L) / 2) / p.phi((-1.0 + L) / 2)
        assert abs(analytic_pair_phase(np.array(-1.0), p)) <= 1.01 * ratio
    direct = np.angle(pair_params.amplitude(1.0))
    assert float(analytic_pair_phase(np.array(1.0), pair_params)) == pytest.approx(
        direct, abs=1e-12)


def test_analytic_phase_matches_unwrapped_state(pair_params, pair_grid):
    psi = gaussian_pair(pair_params, pair_grid)
    num = unwrapped_phase(psi)
    ana = analytic_pair_phase(pair_grid.x, pair_params)
    i0 = pair_grid.index_of(-pair_params.L)[0]
    num = num - num[i0] + ana[i0]
    mask = np.abs(pair_grid.x) <= 5
    assert np.max(np.abs(num[mask] - ana[mask])) <= 1e-10


def test_unwrapped_phase_rejects_unresolved():
    g = build_grid(0, 2 * np.pi, 16)
    with pytest.raises(ConfigurationError):
        unwrapped_phase(ComplexField(g, np.exp(7j * g.x)))


def test_calibrate_example():
    L = calibrate_separation(0.1, 2, 1.0, 1.0)
    a = L**2 / 4
    rho0 = 2 * np.exp(-a) / (2 * np.sqrt(np.pi) * (1 + np.exp(-a)))
    assert rho0 == pytest.approx(0.01, rel=1e-12)
    # the sampled state agrees once packets are far enough apart to construct
    L = calibrate_separation(1e-3, 3, 1.0, 1.0)
    p = GaussianPairParams(L, 1.0, 0.0)
    assert p.density(0.0) == pytest.approx(1e-9, rel=1e-12)


def test_calibrate_monotone():
    targets = [(0.1, 2), (0.05, 2), (0.1, 4), (1e-3, 3)]
    Ls = [calibrate_separation(e, n, 1.0, 1.0) for e, n in targets]
    assert Ls == sorted(Ls)


def test_calibrate_unreachable():
    with pytest.raises(CalibrationError):
        calibrate_separation(0.9, 2, 1.0, 1.0)
    with pytest.raises(CalibrationError):
        calibrate_separation(1e-200, 4, 1.0, 1.0)


def test_pair_grid_puts_ell_on_node():
    g = pair_grid(12.3, 1.0, 0.7)
    assert snap_interval(g, 0.7)[2] < 1e-12


def test_config_validation():
    with pytest.raises(ConfigurationError):
        InstabilityConfig(1.0, [0.1], 1)
    with pytest.raises(ConfigurationError):
        InstabilityConfig(1.0, [-0.1], 2)
    with pytest.raises(ConfigurationError):
        InstabilityConfig(1.0, [], 2)
    with pytest.raises(ConfigurationError):
        InstabilityConfig(1.0, [0.6], 2, profile="gaussian_pair")
    with pytest.raises(ConfigurationError):
        InstabilityConfig(1.0, [0.1], 2, profile="box")


@pytest.mark.parametrize("n_exp,ell", [(3, 1.0), (2, 2.0)])
def test_plateau_sweep_examples(n_exp, ell):
    cfg = InstabilityConfig(ell, [1e-1, 1e-2, 1e-3, 1e-4], n_exp)
    res = epsilon_sweep(cfg)
    assert res.fit.slope == pytest.approx(-(n_exp - 1), abs=1e-3)
    assert res.fit.intercept == pytest.approx(np.log(2 * ell), abs=1e-3)
    assert all(abs(r.rel_err) < 1e-12 for r in res.rows)


def test_pair_sweep_slope():
    cfg = InstabilityConfig(0.2, [1e-2, 1e-3, 1e-4, 1e-5], 2, profile="gaussian_pair", p0=2.0)
    res = epsilon_sweep(cfg)
    assert res.fit.slope == pytest.approx(-1, rel=0.1)
    assert all(r.separation > 0 for r in res.rows)


def test_sweep_rows_sorted_regardless_of_workers():
    cfg = InstabilityConfig(1.0, [1e-3, 1e-1, 1e-4, 1e-2, 3e-3], 2)
    serial = epsilon_sweep(cfg, workers=1)
    parallel = epsilon_sweep(cfg, workers=4)
    eps = [r.epsilon for r in parallel.rows]
    assert eps == sorted(eps)
    assert [r.as_row() for r in serial.rows] == [r.as_row() for r in parallel.rows]


def test_fit_skipped_with_few_points():
    res = epsilon_sweep(InstabilityConfig(1.0, [1e-1, 1e-2, 1e-3], 2))
    assert res.fit.skipped and res.fit.warning and len(res.rows) == 3
    narrow = fit_power_law([0.1, 0.09, 0.08, 0.07], [1, 2, 3, 4])
    assert narrow.skipped


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("QHLAB_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("QHLAB_THREADS", "many")
    assert worker_count() == 1
